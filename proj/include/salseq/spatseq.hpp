#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "salseq/fixdata.hpp"
#include "salseq/metastack.hpp"

namespace salseq {

/// Full-covariance 2D Gaussian mixture fitted by EM.
struct GmmModel {
    int k = 0;
    std::vector<double> weights;                  // sum to 1
    std::vector<std::array<double, 2>> means;     // (x, y)
    std::vector<std::array<double, 3>> covs;      // (xx, xy, yy)
    double log_likelihood = 0.0;
    std::vector<double> ll_trace;                 // per-iteration log-likelihood
};

struct WssCurve {
    std::vector<double> distortions;  // index 0 corresponds to K = 1
};

/// EM with k-means++-style seeding from the given seed, covariance
/// regularized by reg*I every M-step, convergence at relative
/// log-likelihood change < 1e-6 or 200 iterations. Deterministic for a
/// fixed (points, k, seed, reg). Throws ValidationError when |points| < k
/// or when the fit collapses (a component receives no points).
GmmModel fit_gmm(const std::vector<Point2D>& points, int k, std::uint64_t seed,
                 double reg = 1e-3);

/// Hard-assignment index (max responsibility) per point.
std::vector<int> hard_assign(const GmmModel& model, const std::vector<Point2D>& points);

/// Within-cluster sum of squared distances under hard assignment.
double wss(const GmmModel& model, const std::vector<Point2D>& points);

/// WSS for K = 1..k_max, each the best of 5 seeded restarts plus a
/// warm start from the previous K, so the curve does not increase.
WssCurve wss_curve(const std::vector<Point2D>& points, int k_max, std::uint64_t seed);

/// K maximizing the second-order difference of the distortion curve over
/// interior K; ties broken toward smaller K. Needs >= 3 entries.
int elbow(const WssCurve& curve);

/// GMM over the aggregate fixation points (skip_first never applied here);
/// one binary map per component, ordered by descending point count, ties
/// by component index. Maps partition the aggregate map exactly.
MetaStack spatial_maps(const StimulusRecord& record, int k, std::uint64_t seed,
                       double reg = 1e-3);

}  // namespace salseq
