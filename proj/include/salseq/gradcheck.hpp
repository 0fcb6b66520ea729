#pragma once

#include <functional>
#include <string>
#include <vector>

#include "salseq/autograd.hpp"

namespace salseq::ag {

struct GradCheckResult {
    std::string name;
    double max_err = 0.0;  // |analytic - central difference|, unit-floored relative
    double tol = 0.0;
    bool passed = false;
};

/// Central-difference verification of a scalar-valued graph. The function
/// is re-evaluated forward at perturbed leaf values, so the check is
/// independent of the backward implementation. max_entries_per_leaf < 0
/// checks every entry; otherwise a seeded subset of that size per leaf.
GradCheckResult check_gradients(
    const std::string& name, const std::vector<Var>& leaves,
    const std::function<Var(const std::vector<Var>&)>& fn, double tol,
    double h = 1e-4, int max_entries_per_leaf = -1, std::uint64_t seed = 0);

/// Convenience: run several checks and render a pass/fail table.
std::string format_results(const std::vector<GradCheckResult>& results);

}  // namespace salseq::ag
