#pragma once

#include <vector>

#include "salseq/fixdata.hpp"
#include "salseq/metastack.hpp"

namespace salseq {

/// counts[i-1] = number of (observer, stimulus) pairs with at least i
/// fixations; non-increasing by construction.
struct AtLeastHistogram {
    std::vector<long> counts;

    long at_least(int i) const {
        if (i < 1 || static_cast<std::size_t>(i) > counts.size()) return 0;
        return counts[static_cast<std::size_t>(i) - 1];
    }
};

struct GaussianFit {
    double mu = 0.0;     // mode of the histogram (smallest i on ties)
    double sigma = 0.0;  // count-weighted standard deviation of i
};

/// Parameters of the per-ordinal map construction.
struct TemporalScheme {
    Scheme kind = Scheme::Salicon;
    int timesteps = 15;
    int first_index = 1;    // 1-based fixation ordinal feeding map 0
    bool overflow = true;   // final map collects all remaining fixations

    static TemporalScheme mit() { return {Scheme::Mit, 5, 2, false}; }
    static TemporalScheme salicon() { return {Scheme::Salicon, 15, 1, true}; }
    static TemporalScheme defaults(Scheme s) {
        return s == Scheme::Mit ? mit() : salicon();
    }
};

AtLeastHistogram at_least_histogram(const Dataset& dataset);

/// mu = argmax of counts; sigma = weighted SD of i with counts as weights.
/// Throws ValidationError on a zero-mass histogram.
GaussianFit fit_gaussian_histogram(const AtLeastHistogram& h);

/// round(mu + 2 sigma), half away from zero.
int choose_timesteps(double mu, double sigma);

/// Map t holds, for every observer, their (first_index + t)-th fixation.
/// With overflow set the final map additionally collects every fixation
/// past the covered ordinal range.
MetaStack temporal_maps(const StimulusRecord& record, const TemporalScheme& scheme);

}  // namespace salseq
