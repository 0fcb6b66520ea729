#pragma once

#include <vector>

#include "salseq/fixdata.hpp"

namespace salseq {

/// Non-negative real-valued saliency grid.
struct DenseMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;  // row-major, height*width

    DenseMap() = default;
    DenseMap(int w, int h, double fill = 0.0)
        : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

    double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const { return values.size(); }
    bool same_shape(const DenseMap& o) const { return width == o.width && height == o.height; }
};

DenseMap dense_from_fixations(const FixationMap& fix);

/// Spatial sigma (pixels) of the low-pass Gaussian whose transfer function
/// is 0.5 at fc cycles per image along a dimension of larger_dim pixels.
double blur_sigma(double fc, int larger_dim);

/// Blurs a binary fixation map into a dense ground-truth-style map:
/// cutoff-frequency-parameterized Gaussian (0.5 transfer at fc cycles per
/// image along the larger dimension), realized as separable spatial
/// convolution truncated at 4 sigma with reflective padding. Output is
/// rescaled to max 1 when nonzero.
DenseMap blur_fixations(const FixationMap& fix, double fc = 8.0);

/// Unscaled variant (no max-1 rescale); used where linearity matters.
DenseMap blur_fixations_raw(const FixationMap& fix, double fc = 8.0);

DenseMap normalize_sum(const DenseMap& m);    // sums to 1
DenseMap normalize_range(const DenseMap& m);  // min 0, max 1
DenseMap zscore(const DenseMap& m);           // mean 0, SD 1 (signed output)

/// Center-prior Gaussian baseline, sigma = min(H,W)/4, peak at image center.
DenseMap center_prior(int width, int height);

}  // namespace salseq
