#pragma once

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "salseq/fixdata.hpp"
#include "salseq/salmap.hpp"
#include "salseq/tempseq.hpp"

namespace testsupport {

inline double unit_uniform(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

inline salseq::StimulusRecord random_record(std::mt19937_64& rng, int width, int height,
                                            int observers, int max_len,
                                            const std::string& id = "stim") {
    salseq::StimulusRecord rec;
    rec.stimulus_id = id;
    rec.width = width;
    rec.height = height;
    for (int o = 0; o < observers; ++o) {
        salseq::ObserverScanpath sp;
        sp.observer_id = "obs" + std::to_string(o);
        int len = static_cast<int>(rng() % static_cast<std::uint64_t>(max_len + 1));
        for (int i = 0; i < len; ++i) {
            sp.fixations.push_back({static_cast<int>(rng() % width),
                                    static_cast<int>(rng() % height)});
        }
        rec.scanpaths.push_back(std::move(sp));
    }
    return rec;
}

inline salseq::DenseMap random_dense(std::mt19937_64& rng, int w, int h) {
    salseq::DenseMap m(w, h);
    for (auto& v : m.values) v = 0.01 + unit_uniform(rng);
    return m;
}

inline salseq::FixationMap random_fixmap(std::mt19937_64& rng, int w, int h, int n_points) {
    salseq::FixationMap f(w, h);
    for (int i = 0; i < n_points; ++i)
        f.set(static_cast<int>(rng() % w), static_cast<int>(rng() % h));
    return f;
}

/// Gaussian blobs around given centers; sigma in pixels.
inline std::vector<salseq::Point2D> blob_points(std::mt19937_64& rng,
                                                const std::vector<std::pair<double, double>>& centers,
                                                const std::vector<int>& sizes, double sigma,
                                                int width, int height) {
    std::normal_distribution<double> norm(0.0, sigma);
    std::vector<salseq::Point2D> pts;
    for (std::size_t c = 0; c < centers.size(); ++c) {
        for (int i = 0; i < sizes[c]; ++i) {
            int x = std::clamp(static_cast<int>(std::lround(centers[c].first + norm(rng))), 0,
                               width - 1);
            int y = std::clamp(static_cast<int>(std::lround(centers[c].second + norm(rng))), 0,
                               height - 1);
            pts.push_back({x, y});
        }
    }
    return pts;
}

/// Direct DFT low-pass oracle for the cutoff-parameterized blur: periodic
/// convolution with transfer exp(-ln2 * (f/fc)^2), f in cycles per image
/// measured against the larger dimension.
inline salseq::DenseMap dft_blur_oracle(const salseq::FixationMap& fix, double fc) {
    const int w = fix.width, h = fix.height;
    const int L = std::max(w, h);
    // frequency response of the equivalent spatial Gaussian
    auto transfer = [&](double cyc_x, double cyc_y) {
        // cycles per image along the larger dimension for each axis
        double fx = cyc_x * L / w;
        double fy = cyc_y * L / h;
        double f2 = fx * fx + fy * fy;
        return std::exp(-std::log(2.0) * f2 / (fc * fc));
    };
    // forward DFT of the binary map
    std::vector<double> re(static_cast<std::size_t>(w) * h, 0.0), im(re.size(), 0.0);
    for (int ky = 0; ky < h; ++ky) {
        for (int kx = 0; kx < w; ++kx) {
            double sr = 0.0, si = 0.0;
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    if (!fix.at(x, y)) continue;
                    double ang = -2.0 * M_PI * (static_cast<double>(kx) * x / w +
                                                static_cast<double>(ky) * y / h);
                    sr += std::cos(ang);
                    si += std::sin(ang);
                }
            }
            double kxc = kx <= w / 2 ? kx : kx - w;
            double kyc = ky <= h / 2 ? ky : ky - h;
            double t = transfer(kxc, kyc);
            re[static_cast<std::size_t>(ky) * w + kx] = sr * t;
            im[static_cast<std::size_t>(ky) * w + kx] = si * t;
        }
    }
    // inverse DFT
    salseq::DenseMap out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int ky = 0; ky < h; ++ky) {
                for (int kx = 0; kx < w; ++kx) {
                    double ang = 2.0 * M_PI * (static_cast<double>(kx) * x / w +
                                               static_cast<double>(ky) * y / h);
                    acc += re[static_cast<std::size_t>(ky) * w + kx] * std::cos(ang) -
                           im[static_cast<std::size_t>(ky) * w + kx] * std::sin(ang);
                }
            }
            out.at(x, y) = acc / (static_cast<double>(w) * h);
        }
    }
    return out;
}

/// Half-Gaussian "at least i fixations" curve shaped like the SALICON
/// training statistics: peak at i=1, 15 observers x many images, weighted
/// SD close to 6.7.
inline salseq::AtLeastHistogram salicon_shaped_histogram() {
    salseq::AtLeastHistogram h;
    const double scale = 11.2;
    for (int i = 1; i <= 35; ++i) {
        double v = 10000.0 * std::exp(-0.5 * (i - 1) * (i - 1) / (scale * scale));
        h.counts.push_back(static_cast<long>(std::lround(v)));
    }
    return h;
}

class TempDir {
public:
    explicit TempDir(const std::string& hint) {
        path_ = std::filesystem::temp_directory_path() /
                ("salseq_test_" + hint + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    std::string str() const { return path_.string(); }
    std::filesystem::path path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace testsupport
