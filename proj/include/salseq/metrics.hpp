#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "salseq/fixdata.hpp"
#include "salseq/salmap.hpp"

namespace salseq {

/// Saliency evaluation metrics. Randomized metrics (auc_borji, sauc) take
/// explicit seeds and are bit-reproducible.
namespace metrics {

inline constexpr double kDefaultEps = 1e-7;

/// Both maps sum-normalized; sum over pixels of gt*log(eps + gt/(eps+pred)).
double kl(const DenseMap& pred, const DenseMap& gt, double eps = kDefaultEps);

/// Pearson correlation of the flattened grids.
double cc(const DenseMap& a, const DenseMap& b);

/// Histogram intersection of sum-normalized maps.
double sim(const DenseMap& a, const DenseMap& b);

/// Mean z-scored saliency at fixated pixels.
double nss(const DenseMap& pred, const FixationMap& fix);

/// ROC area thresholding at each fixated pixel's saliency value; FPR over
/// all non-fixated pixels; trapezoid with (0,0) and (1,1) anchors. A
/// threshold exactly at a fixated value counts that fixation (>=).
double auc_judd(const DenseMap& pred, const FixationMap& fix);

/// Like auc_judd but per split the negatives are fix.count uniformly
/// random non-fixated pixels; averaged over n_splits.
double auc_borji(const DenseMap& pred, const FixationMap& fix, int n_splits = 100,
                 std::uint64_t seed = 0);

/// Shuffled AUC: negatives sampled from other images' fixation cells.
double sauc(const DenseMap& pred, const FixationMap& fix, const FixationMap& other_fix,
            int n_splits = 100, std::uint64_t seed = 0);

/// Mean over fixated pixels of log2(pred+eps) - log2(baseline+eps), both
/// maps sum-normalized.
double info_gain(const DenseMap& pred, const FixationMap& fix, const DenseMap& baseline,
                 double eps = kDefaultEps);

}  // namespace metrics

struct MetricReport {
    std::string id;
    std::optional<double> kl, cc, sim, nss, auc_judd, auc_borji, sauc, ig;

    static std::string csv_header();
    std::string csv_row() const;
    std::string to_json() const;
};

}  // namespace salseq
