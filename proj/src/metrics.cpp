#include "salseq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

namespace salseq::metrics {

namespace {

void require_same_shape(const DenseMap& a, const DenseMap& b, const char* op) {
    if (!a.same_shape(b))
        throw ValidationError(std::string(op) + ": shape mismatch " + std::to_string(a.width) +
                              "x" + std::to_string(a.height) + " vs " + std::to_string(b.width) +
                              "x" + std::to_string(b.height));
}

void require_fix_shape(const DenseMap& a, const FixationMap& f, const char* op) {
    if (a.width != f.width || a.height != f.height)
        throw ValidationError(std::string(op) + ": prediction / fixation map shape mismatch");
}

// ROC area for the (>= threshold) sweep: thresholds at each positive's
// value, TPR over positives, FPR over the given negative values.
double sweep_auc(const std::vector<double>& pos, const std::vector<double>& neg) {
    std::vector<double> thresholds = pos;
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    std::vector<std::pair<double, double>> roc;  // (fpr, tpr)
    roc.reserve(thresholds.size() + 2);
    roc.emplace_back(0.0, 0.0);
    std::vector<double> sorted_pos = pos, sorted_neg = neg;
    std::sort(sorted_pos.begin(), sorted_pos.end());
    std::sort(sorted_neg.begin(), sorted_neg.end());
    auto frac_ge = [](const std::vector<double>& v, double t) {
        auto it = std::lower_bound(v.begin(), v.end(), t);
        return static_cast<double>(v.end() - it) / static_cast<double>(v.size());
    };
    for (double t : thresholds) roc.emplace_back(frac_ge(sorted_neg, t), frac_ge(sorted_pos, t));
    roc.emplace_back(1.0, 1.0);
    std::sort(roc.begin(), roc.end());
    double area = 0.0;
    for (std::size_t i = 1; i < roc.size(); ++i) {
        area += (roc[i].first - roc[i - 1].first) * (roc[i].second + roc[i - 1].second) * 0.5;
    }
    return area;
}

std::vector<double> values_at_fixations(const DenseMap& pred, const FixationMap& fix) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(fix.count));
    for (std::size_t i = 0; i < fix.grid.size(); ++i)
        if (fix.grid[i]) out.push_back(pred.values[i]);
    return out;
}

}  // namespace

double kl(const DenseMap& pred, const DenseMap& gt, double eps) {
    require_same_shape(pred, gt, "kl");
    if (eps <= 0.0) throw ValidationError("kl: eps must be > 0");
    DenseMap p = normalize_sum(pred);
    DenseMap g = normalize_sum(gt);
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (g.values[i] > 0.0)
            acc += g.values[i] * std::log(eps + g.values[i] / (eps + p.values[i]));
    }
    return acc;
}

double cc(const DenseMap& a, const DenseMap& b) {
    require_same_shape(a, b, "cc");
    const double n = static_cast<double>(a.size());
    double ma = std::accumulate(a.values.begin(), a.values.end(), 0.0) / n;
    double mb = std::accumulate(b.values.begin(), b.values.end(), 0.0) / n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double da = a.values[i] - ma, db = b.values[i] - mb;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    if (va <= 0.0 || vb <= 0.0) throw ValidationError("cc: constant map has no correlation");
    return cov / std::sqrt(va * vb);
}

double sim(const DenseMap& a, const DenseMap& b) {
    require_same_shape(a, b, "sim");
    DenseMap pa = normalize_sum(a);
    DenseMap pb = normalize_sum(b);
    double acc = 0.0;
    for (std::size_t i = 0; i < pa.size(); ++i) acc += std::min(pa.values[i], pb.values[i]);
    return acc;
}

double nss(const DenseMap& pred, const FixationMap& fix) {
    require_fix_shape(pred, fix, "nss");
    if (fix.count < 1) throw ValidationError("nss: no fixations");
    DenseMap z = zscore(pred);
    double acc = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i)
        if (fix.grid[i]) acc += z.values[i];
    return acc / fix.count;
}

double auc_judd(const DenseMap& pred, const FixationMap& fix) {
    require_fix_shape(pred, fix, "auc_judd");
    if (fix.count < 1) throw ValidationError("auc_judd: no fixations");
    std::vector<double> pos = values_at_fixations(pred, fix);
    std::vector<double> neg;
    neg.reserve(pred.size() - pos.size());
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (!fix.grid[i]) neg.push_back(pred.values[i]);
    if (neg.empty()) throw ValidationError("auc_judd: every pixel fixated");
    return sweep_auc(pos, neg);
}

double auc_borji(const DenseMap& pred, const FixationMap& fix, int n_splits,
                 std::uint64_t seed) {
    require_fix_shape(pred, fix, "auc_borji");
    if (fix.count < 1) throw ValidationError("auc_borji: no fixations");
    if (n_splits < 1) throw ValidationError("auc_borji: n_splits must be >= 1");
    std::vector<double> pos = values_at_fixations(pred, fix);
    std::vector<double> pool;  // values at non-fixated pixels
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (!fix.grid[i]) pool.push_back(pred.values[i]);
    if (pool.empty()) throw ValidationError("auc_borji: empty negative set");

    std::mt19937_64 rng(seed);
    double acc = 0.0;
    std::vector<double> neg(pos.size());
    for (int s = 0; s < n_splits; ++s) {
        for (auto& v : neg) v = pool[rng() % pool.size()];
        acc += sweep_auc(pos, neg);
    }
    return acc / n_splits;
}

double sauc(const DenseMap& pred, const FixationMap& fix, const FixationMap& other_fix,
            int n_splits, std::uint64_t seed) {
    require_fix_shape(pred, fix, "sauc");
    if (fix.count < 1) throw ValidationError("sauc: no fixations");
    if (other_fix.count < 1) throw ValidationError("sauc: empty negative fixation set");
    require_fix_shape(pred, other_fix, "sauc");
    if (n_splits < 1) throw ValidationError("sauc: n_splits must be >= 1");
    std::vector<double> pos = values_at_fixations(pred, fix);
    std::vector<double> pool = values_at_fixations(pred, other_fix);

    std::mt19937_64 rng(seed);
    double acc = 0.0;
    std::vector<double> neg(pos.size());
    for (int s = 0; s < n_splits; ++s) {
        for (auto& v : neg) v = pool[rng() % pool.size()];
        acc += sweep_auc(pos, neg);
    }
    return acc / n_splits;
}

double info_gain(const DenseMap& pred, const FixationMap& fix, const DenseMap& baseline,
                 double eps) {
    require_fix_shape(pred, fix, "info_gain");
    require_same_shape(pred, baseline, "info_gain");
    if (fix.count < 1) throw ValidationError("info_gain: no fixations");
    DenseMap p = normalize_sum(pred);
    DenseMap b = normalize_sum(baseline);
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (fix.grid[i])
            acc += std::log2(p.values[i] + eps) - std::log2(b.values[i] + eps);
    }
    return acc / fix.count;
}

}  // namespace salseq::metrics

namespace salseq {

namespace {
std::string fmt(const std::optional<double>& v) {
    if (!v) return "";
    std::ostringstream os;
    os.precision(17);
    os << *v;
    return os.str();
}
}  // namespace

std::string MetricReport::csv_header() {
    return "id,kl,cc,sim,nss,auc_judd,auc_borji,sauc,ig";
}

std::string MetricReport::csv_row() const {
    std::ostringstream os;
    os << id << "," << fmt(kl) << "," << fmt(cc) << "," << fmt(sim) << "," << fmt(nss) << ","
       << fmt(auc_judd) << "," << fmt(auc_borji) << "," << fmt(sauc) << "," << fmt(ig);
    return os.str();
}

std::string MetricReport::to_json() const {
    nlohmann::ordered_json j;
    j["id"] = id;
    auto put = [&](const char* key, const std::optional<double>& v) {
        if (v)
            j[key] = *v;
        else
            j[key] = nullptr;
    };
    put("kl", kl);
    put("cc", cc);
    put("sim", sim);
    put("nss", nss);
    put("auc_judd", auc_judd);
    put("auc_borji", auc_borji);
    put("sauc", sauc);
    put("ig", ig);
    return j.dump();
}

}  // namespace salseq
