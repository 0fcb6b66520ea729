#include "salseq/tempseq.hpp"

#include <algorithm>
#include <cmath>

namespace salseq {

AtLeastHistogram at_least_histogram(const Dataset& dataset) {
    std::size_t max_len = 0;
    for (const auto& rec : dataset.records)
        for (const auto& sp : rec.scanpaths) max_len = std::max(max_len, sp.fixations.size());
    AtLeastHistogram h;
    h.counts.assign(max_len, 0);
    for (const auto& rec : dataset.records) {
        for (const auto& sp : rec.scanpaths) {
            // a scanpath of length L contributes to counts for i = 1..L
            for (std::size_t i = 0; i < sp.fixations.size(); ++i) ++h.counts[i];
        }
    }
    return h;
}

GaussianFit fit_gaussian_histogram(const AtLeastHistogram& h) {
    double mass = 0.0;
    for (long c : h.counts) mass += static_cast<double>(c);
    if (h.counts.empty() || mass <= 0.0)
        throw ValidationError("fit_gaussian_histogram: histogram has zero mass");

    GaussianFit fit;
    long best = -1;
    for (std::size_t idx = 0; idx < h.counts.size(); ++idx) {
        if (h.counts[idx] > best) {  // strict: smallest i wins ties
            best = h.counts[idx];
            fit.mu = static_cast<double>(idx + 1);
        }
    }
    double wmean = 0.0;
    for (std::size_t idx = 0; idx < h.counts.size(); ++idx)
        wmean += static_cast<double>(idx + 1) * static_cast<double>(h.counts[idx]);
    wmean /= mass;
    double var = 0.0;
    for (std::size_t idx = 0; idx < h.counts.size(); ++idx) {
        double d = static_cast<double>(idx + 1) - wmean;
        var += d * d * static_cast<double>(h.counts[idx]);
    }
    fit.sigma = std::sqrt(var / mass);
    return fit;
}

int choose_timesteps(double mu, double sigma) {
    if (sigma < 0.0) throw ValidationError("choose_timesteps: sigma must be >= 0");
    double v = mu + 2.0 * sigma;
    // half away from zero, platform-independent
    return static_cast<int>(v >= 0.0 ? std::floor(v + 0.5) : std::ceil(v - 0.5));
}

MetaStack temporal_maps(const StimulusRecord& record, const TemporalScheme& scheme) {
    MetaStack stack;
    stack.stimulus_id = record.stimulus_id;
    stack.mode = StackMode::NonIncremental;
    stack.axis = StackAxis::Temporal;
    stack.maps.assign(static_cast<std::size_t>(scheme.timesteps),
                      FixationMap(record.width, record.height));

    const int T = scheme.timesteps;
    for (const auto& sp : record.scanpaths) {
        for (std::size_t i = 0; i < sp.fixations.size(); ++i) {
            int ordinal = static_cast<int>(i) + 1;
            int t = ordinal - scheme.first_index;
            if (t < 0) continue;
            if (t >= T) {
                if (!scheme.overflow) continue;
                t = T - 1;
            }
            stack.maps[static_cast<std::size_t>(t)].set(sp.fixations[i].x, sp.fixations[i].y);
        }
    }
    return stack;
}

}  // namespace salseq
