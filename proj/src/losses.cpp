#include "salseq/losses.hpp"

#include <cmath>

namespace salseq::losses {

using ag::Var;

namespace {

ag::Tensor tensor_from_dense(const DenseMap& m) {
    ag::Tensor t(ag::Shape{1, 1, m.height, m.width});
    t.data = m.values;
    return t;
}

// guard against exactly-degenerate predictions (all-zero or constant maps
// from a freshly initialized network); small enough to be invisible at the
// metric agreement tolerances
constexpr double kDegenerateGuard = 1e-12;

Var sum_normalized(Var x) {
    return ag::div(x, ag::add_scalar(ag::sum(x), 1e-12));
}

}  // namespace

Var from_dense(const DenseMap& m) { return ag::leaf(tensor_from_dense(m)); }
Var const_from_dense(const DenseMap& m) { return ag::constant(tensor_from_dense(m)); }

Var kl_loss(Var pred, const DenseMap& gt, double eps) {
    DenseMap g = normalize_sum(gt);
    Var pn = sum_normalized(pred);
    // gt * log(eps + gt / (eps + pred)), zero wherever gt is zero
    Var ratio = ag::div(const_from_dense(g), ag::add_scalar(pn, eps));
    Var term = ag::mul(const_from_dense(g), ag::vlog(ag::add_scalar(ratio, eps)));
    return ag::sum(term);
}

Var cc_loss(Var pred, const DenseMap& gt) {
    const double n = static_cast<double>(gt.values.size());
    DenseMap gc = gt;
    double gm = 0.0;
    for (double v : gt.values) gm += v;
    gm /= n;
    double gvar = 0.0;
    for (auto& v : gc.values) {
        v -= gm;
        gvar += v * v;
    }
    if (gvar <= 0.0) throw ValidationError("cc_loss: constant target");

    Var centered = ag::sub(pred, ag::mean(pred));
    Var cov = ag::sum(ag::mul(centered, const_from_dense(gc)));
    Var denom = ag::vsqrt(
        ag::add_scalar(ag::mul_scalar(ag::sum(ag::mul(centered, centered)), gvar),
                       kDegenerateGuard));
    Var cc = ag::div(cov, denom);
    return ag::add_scalar(ag::neg(cc), 1.0);
}

Var sim_loss(Var pred, const DenseMap& gt) {
    DenseMap g = normalize_sum(gt);
    Var pn = sum_normalized(pred);
    Var s = ag::sum(ag::emin(pn, const_from_dense(g)));
    return ag::add_scalar(ag::neg(s), 1.0);
}

Var nss_loss(Var pred, const FixationMap& fix) {
    if (fix.count < 1) throw ValidationError("nss_loss: no fixations");
    const auto& shape = pred->value.shape;
    if (shape.h != fix.height || shape.w != fix.width)
        throw ValidationError("nss_loss: prediction / fixation shape mismatch");
    Var centered = ag::sub(pred, ag::mean(pred));
    Var sd = ag::vsqrt(ag::add_scalar(ag::mean(ag::mul(centered, centered)), kDegenerateGuard));
    Var z = ag::div(centered, sd);
    ag::Tensor mask(shape);
    for (std::size_t i = 0; i < fix.grid.size(); ++i) mask.data[i] = fix.grid[i] ? 1.0 : 0.0;
    Var nss = ag::mul_scalar(ag::sum(ag::mul(z, ag::constant(mask))), 1.0 / fix.count);
    return ag::neg(nss);
}

Var sal_loss(const std::array<Var, 4>& s, const DenseMap& gt_gauss, const FixationMap& gt_pts,
             const LossWeights& w) {
    if (w.alpha < 0 || w.beta < 0 || w.gamma < 0 || w.delta < 0)
        throw ValidationError("sal_loss: weights must be non-negative");
    if (w.alpha == 0 && w.beta == 0 && w.gamma == 0 && w.delta == 0)
        throw ValidationError("sal_loss: at least one weight must be positive");
    Var total = ag::constant(ag::Tensor(ag::Shape{1, 1, 1, 1}));
    if (w.alpha > 0) total = ag::add(total, ag::mul_scalar(kl_loss(s[0], gt_gauss), w.alpha));
    if (w.beta > 0) total = ag::add(total, ag::mul_scalar(cc_loss(s[1], gt_gauss), w.beta));
    if (w.gamma > 0) total = ag::add(total, ag::mul_scalar(sim_loss(s[2], gt_gauss), w.gamma));
    if (w.delta > 0) total = ag::add(total, ag::mul_scalar(nss_loss(s[3], gt_pts), w.delta));
    return total;
}

Var aux_loss(const std::vector<Var>& outputs, const std::vector<FixationMap>& maps) {
    if (outputs.size() != maps.size())
        throw ValidationError("aux_loss: output / metadata count mismatch (" +
                              std::to_string(outputs.size()) + " vs " +
                              std::to_string(maps.size()) + ")");
    Var total = ag::constant(ag::Tensor(ag::Shape{1, 1, 1, 1}));
    int included = 0;
    for (std::size_t t = 0; t < outputs.size(); ++t) {
        if (maps[t].count == 0) continue;  // NSS undefined on empty maps
        total = ag::add(total, nss_loss(outputs[t], maps[t]));
        ++included;
    }
    if (included == 0) throw ValidationError("aux_loss: every timestep map is empty");
    return ag::mul_scalar(total, 1.0 / included);
}

double l_kl(const DenseMap& pred, const DenseMap& gt, double eps) {
    return metrics::kl(pred, gt, eps);
}

double l_cc(const DenseMap& pred, const DenseMap& gt) { return 1.0 - metrics::cc(pred, gt); }

double l_sim(const DenseMap& pred, const DenseMap& gt) { return 1.0 - metrics::sim(pred, gt); }

double l_nss(const DenseMap& pred, const FixationMap& fix) {
    return -metrics::nss(pred, fix);
}

double l_sal(const DenseMap& s1, const DenseMap& s2, const DenseMap& s3, const DenseMap& s4,
             const DenseMap& gt_gauss, const FixationMap& gt_pts, const LossWeights& w) {
    if (w.alpha < 0 || w.beta < 0 || w.gamma < 0 || w.delta < 0)
        throw ValidationError("l_sal: weights must be non-negative");
    if (w.alpha == 0 && w.beta == 0 && w.gamma == 0 && w.delta == 0)
        throw ValidationError("l_sal: at least one weight must be positive");
    // evaluated straight from the metric definitions so the recombination
    // identity against the hand-weighted sum holds to double rounding
    double total = 0.0;
    if (w.alpha > 0) total += w.alpha * l_kl(s1, gt_gauss);
    if (w.beta > 0) total += w.beta * l_cc(s2, gt_gauss);
    if (w.gamma > 0) total += w.gamma * l_sim(s3, gt_gauss);
    if (w.delta > 0) total += w.delta * l_nss(s4, gt_pts);
    return total;
}

double l_aux(const std::vector<DenseMap>& outputs, const std::vector<FixationMap>& maps) {
    if (outputs.size() != maps.size())
        throw ValidationError("l_aux: output / metadata count mismatch (" +
                              std::to_string(outputs.size()) + " vs " +
                              std::to_string(maps.size()) + ")");
    double total = 0.0;
    int included = 0;
    for (std::size_t t = 0; t < outputs.size(); ++t) {
        if (maps[t].count == 0) continue;
        total += l_nss(outputs[t], maps[t]);
        ++included;
    }
    if (included == 0) throw ValidationError("l_aux: every timestep map is empty");
    return total / included;
}

}  // namespace salseq::losses
