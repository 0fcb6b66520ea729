#include "salseq/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace salseq::ag {

GradCheckResult check_gradients(const std::string& name, const std::vector<Var>& leaves,
                                const std::function<Var(const std::vector<Var>&)>& fn,
                                double tol, double h, int max_entries_per_leaf,
                                std::uint64_t seed) {
    // reset grads up front: backward() only zeroes nodes reachable from the
    // root, and a leaf absent from this graph would keep a stale gradient
    for (const auto& leaf : leaves) leaf->zero_grad();
    Var root = fn(leaves);
    backward(root);

    // snapshot analytic grads before the FD evaluations rebuild the graph
    std::vector<std::vector<double>> analytic;
    analytic.reserve(leaves.size());
    for (const auto& leaf : leaves) analytic.push_back(leaf->grad.data);

    std::mt19937_64 rng(seed);
    GradCheckResult res{name, 0.0, tol, false};
    for (std::size_t li = 0; li < leaves.size(); ++li) {
        auto& data = leaves[li]->value.data;
        std::vector<std::size_t> indices(data.size());
        std::iota(indices.begin(), indices.end(), 0);
        if (max_entries_per_leaf >= 0 &&
            static_cast<std::size_t>(max_entries_per_leaf) < indices.size()) {
            for (std::size_t i = 0; i < indices.size(); ++i)
                std::swap(indices[i], indices[rng() % indices.size()]);
            indices.resize(static_cast<std::size_t>(max_entries_per_leaf));
        }
        for (std::size_t idx : indices) {
            double orig = data[idx];
            data[idx] = orig + h;
            double fp = scalar(fn(leaves));
            data[idx] = orig - h;
            double fm = scalar(fn(leaves));
            data[idx] = orig;
            double fd = (fp - fm) / (2.0 * h);
            // leaves never reached by backward() keep an unallocated grad;
            // their analytic gradient is identically zero
            double a = idx < analytic[li].size() ? analytic[li][idx] : 0.0;
            double err = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1.0});
            // a non-finite objective or gradient must fail, not vanish in
            // the NaN-ignoring std::max comparison
            if (!std::isfinite(err)) err = std::numeric_limits<double>::infinity();
            res.max_err = std::max(res.max_err, err);
        }
    }
    res.passed = res.max_err < tol;
    return res;
}

std::string format_results(const std::vector<GradCheckResult>& results) {
    std::ostringstream os;
    std::size_t width = 12;
    for (const auto& r : results) width = std::max(width, r.name.size());
    for (const auto& r : results) {
        os << (r.passed ? "PASS" : "FAIL") << "  " << r.name;
        os << std::string(width - r.name.size() + 2, ' ');
        os.precision(3);
        os << std::scientific << "max_err=" << r.max_err << "  tol=" << r.tol << "\n";
    }
    return os.str();
}

}  // namespace salseq::ag
