#include "salseq/salmap.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace salseq {

DenseMap dense_from_fixations(const FixationMap& fix) {
    DenseMap m(fix.width, fix.height);
    for (std::size_t i = 0; i < fix.grid.size(); ++i) m.values[i] = fix.grid[i] ? 1.0 : 0.0;
    return m;
}

double blur_sigma(double fc, int larger_dim) {
    // Transfer exp(-2 pi^2 sigma^2 (f/L)^2) == 0.5 at f = fc cycles/image.
    return larger_dim * std::sqrt(std::log(2.0) / 2.0) / (M_PI * fc);
}

namespace {

// reflective index (edge-inclusive mirror): ... 2 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
int reflect(int i, int n) {
    if (n == 1) return 0;
    int period = 2 * n;
    i = ((i % period) + period) % period;
    return i < n ? i : period - 1 - i;
}

std::vector<double> gaussian_taps(double sigma) {
    int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
    std::vector<double> taps(2 * radius + 1);
    double sum = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        double v = std::exp(-0.5 * (k / sigma) * (k / sigma));
        taps[k + radius] = v;
        sum += v;
    }
    for (auto& t : taps) t /= sum;
    return taps;
}

}  // namespace

DenseMap blur_fixations_raw(const FixationMap& fix, double fc) {
    if (fc <= 0.0) throw ValidationError("blur_fixations: fc must be > 0");
    const int w = fix.width, h = fix.height;
    double sigma = blur_sigma(fc, std::max(w, h));
    auto taps = gaussian_taps(sigma);
    int radius = (static_cast<int>(taps.size()) - 1) / 2;

    DenseMap tmp(w, h), out(w, h);
    // horizontal pass
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                int xs = reflect(x + k, w);
                if (fix.grid[static_cast<std::size_t>(y) * w + xs])
                    acc += taps[k + radius];
            }
            tmp.at(x, y) = acc;
        }
    }
    // vertical pass
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                acc += taps[k + radius] * tmp.at(x, reflect(y + k, h));
            }
            out.at(x, y) = acc;
        }
    }
    return out;
}

DenseMap blur_fixations(const FixationMap& fix, double fc) {
    DenseMap out = blur_fixations_raw(fix, fc);
    double mx = *std::max_element(out.values.begin(), out.values.end());
    if (mx > 0.0) {
        for (auto& v : out.values) v /= mx;
    }
    return out;
}

DenseMap normalize_sum(const DenseMap& m) {
    double s = std::accumulate(m.values.begin(), m.values.end(), 0.0);
    if (s <= 0.0) throw ValidationError("normalize_sum: map has non-positive sum");
    DenseMap out = m;
    for (auto& v : out.values) v /= s;
    return out;
}

DenseMap normalize_range(const DenseMap& m) {
    auto [mn_it, mx_it] = std::minmax_element(m.values.begin(), m.values.end());
    double mn = *mn_it, mx = *mx_it;
    if (mx - mn <= 0.0) throw ValidationError("normalize_range: constant map");
    DenseMap out = m;
    for (auto& v : out.values) v = (v - mn) / (mx - mn);
    return out;
}

DenseMap zscore(const DenseMap& m) {
    double n = static_cast<double>(m.size());
    double mean = std::accumulate(m.values.begin(), m.values.end(), 0.0) / n;
    double var = 0.0;
    for (double v : m.values) var += (v - mean) * (v - mean);
    var /= n;
    if (var <= 0.0) throw ValidationError("zscore: map has zero standard deviation");
    double sd = std::sqrt(var);
    DenseMap out = m;
    for (auto& v : out.values) v = (v - mean) / sd;
    return out;
}

DenseMap center_prior(int width, int height) {
    DenseMap out(width, height);
    double sigma = std::min(width, height) / 4.0;
    double cx = (width - 1) / 2.0, cy = (height - 1) / 2.0;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double dx = x - cx, dy = y - cy;
            out.at(x, y) = std::exp(-0.5 * (dx * dx + dy * dy) / (sigma * sigma));
        }
    }
    return out;
}

}  // namespace salseq
