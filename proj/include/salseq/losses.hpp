#pragma once

#include <array>
#include <vector>

#include "salseq/autograd.hpp"
#include "salseq/metrics.hpp"
#include "salseq/salmap.hpp"

namespace salseq {

struct LossWeights {
    double alpha = 2.0;   // KL term
    double beta = 2.0;    // CC term
    double gamma = 5.0;   // SIM term
    double delta = 1.0;   // NSS term
    double aux_weight = 0.01;
};

/// Differentiable losses over (1,1,H,W) graph nodes. Targets are
/// constants. Forward values agree with the metrics module.
namespace losses {

ag::Var kl_loss(ag::Var pred, const DenseMap& gt, double eps = metrics::kDefaultEps);
ag::Var cc_loss(ag::Var pred, const DenseMap& gt);   // 1 - CC
ag::Var sim_loss(ag::Var pred, const DenseMap& gt);  // 1 - SIM
ag::Var nss_loss(ag::Var pred, const FixationMap& fix);  // -NSS

/// alpha*KL(S1) + beta*(1-CC)(S2) + gamma*(1-SIM)(S3) + delta*(-NSS)(S4).
ag::Var sal_loss(const std::array<ag::Var, 4>& s, const DenseMap& gt_gauss,
                 const FixationMap& gt_pts, const LossWeights& w);

/// Mean of -NSS(o_t, m_t) over timesteps whose m_t has fixations; empty
/// maps are skipped, all-empty input is an error.
ag::Var aux_loss(const std::vector<ag::Var>& outputs, const std::vector<FixationMap>& maps);

ag::Var from_dense(const DenseMap& m);           // gradient leaf
ag::Var const_from_dense(const DenseMap& m);

// forward-only conveniences on plain maps
double l_kl(const DenseMap& pred, const DenseMap& gt, double eps = metrics::kDefaultEps);
double l_cc(const DenseMap& pred, const DenseMap& gt);
double l_sim(const DenseMap& pred, const DenseMap& gt);
double l_nss(const DenseMap& pred, const FixationMap& fix);
double l_sal(const DenseMap& s1, const DenseMap& s2, const DenseMap& s3, const DenseMap& s4,
             const DenseMap& gt_gauss, const FixationMap& gt_pts, const LossWeights& w);
double l_aux(const std::vector<DenseMap>& outputs, const std::vector<FixationMap>& maps);

}  // namespace losses
}  // namespace salseq
