#include "salseq/spatseq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace salseq {

namespace {

constexpr double kTwoPi = 6.283185307179586;

struct Pt {
    double x, y;
};

std::vector<Pt> to_real(const std::vector<Point2D>& points) {
    std::vector<Pt> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        out[i] = {static_cast<double>(points[i].x), static_cast<double>(points[i].y)};
    return out;
}

double unit_uniform(std::mt19937_64& rng) {
    return (rng() >> 11) * 0x1.0p-53;
}

// k-means++ style seeding: squared-distance-weighted draws.
std::vector<Pt> seed_centers(const std::vector<Pt>& pts, int k, std::mt19937_64& rng) {
    std::vector<Pt> centers;
    centers.push_back(pts[static_cast<std::size_t>(unit_uniform(rng) * pts.size()) % pts.size()]);
    std::vector<double> d2(pts.size());
    while (static_cast<int>(centers.size()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            double best = std::numeric_limits<double>::max();
            for (const auto& c : centers) {
                double dx = pts[i].x - c.x, dy = pts[i].y - c.y;
                best = std::min(best, dx * dx + dy * dy);
            }
            d2[i] = best;
            total += best;
        }
        std::size_t pick;
        if (total <= 0.0) {
            pick = static_cast<std::size_t>(unit_uniform(rng) * pts.size()) % pts.size();
        } else {
            double u = unit_uniform(rng) * total;
            pick = pts.size() - 1;
            double acc = 0.0;
            for (std::size_t i = 0; i < pts.size(); ++i) {
                acc += d2[i];
                if (u <= acc) {
                    pick = i;
                    break;
                }
            }
        }
        centers.push_back(pts[pick]);
    }
    return centers;
}

double log_gauss2(const Pt& p, const std::array<double, 2>& mean,
                  const std::array<double, 3>& cov) {
    double det = cov[0] * cov[2] - cov[1] * cov[1];
    double dx = p.x - mean[0], dy = p.y - mean[1];
    // inverse of [[xx, xy], [xy, yy]]
    double quad = (cov[2] * dx * dx - 2.0 * cov[1] * dx * dy + cov[0] * dy * dy) / det;
    return -std::log(kTwoPi) - 0.5 * std::log(det) - 0.5 * quad;
}

GmmModel run_em(const std::vector<Pt>& pts, const std::vector<Pt>& init_means, double reg) {
    const int k = static_cast<int>(init_means.size());
    const std::size_t n = pts.size();
    GmmModel m;
    m.k = k;
    m.weights.assign(k, 1.0 / k);
    m.means.resize(k);
    for (int j = 0; j < k; ++j) m.means[j] = {init_means[j].x, init_means[j].y};

    // shared initial covariance: sample covariance of the whole set + reg*I
    double mx = 0.0, my = 0.0;
    for (const auto& p : pts) {
        mx += p.x;
        my += p.y;
    }
    mx /= n;
    my /= n;
    std::array<double, 3> cov0 = {reg, 0.0, reg};
    for (const auto& p : pts) {
        cov0[0] += (p.x - mx) * (p.x - mx) / n;
        cov0[1] += (p.x - mx) * (p.y - my) / n;
        cov0[2] += (p.y - my) * (p.y - my) / n;
    }
    m.covs.assign(k, cov0);

    std::vector<double> resp(n * k);
    double prev_ll = -std::numeric_limits<double>::max();
    for (int iter = 0; iter < 200; ++iter) {
        // E-step
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double mxl = -std::numeric_limits<double>::max();
            for (int j = 0; j < k; ++j) {
                double l = std::log(m.weights[j] + 1e-300) + log_gauss2(pts[i], m.means[j], m.covs[j]);
                resp[i * k + j] = l;
                mxl = std::max(mxl, l);
            }
            double s = 0.0;
            for (int j = 0; j < k; ++j) s += std::exp(resp[i * k + j] - mxl);
            double lse = mxl + std::log(s);
            ll += lse;
            for (int j = 0; j < k; ++j) resp[i * k + j] = std::exp(resp[i * k + j] - lse);
        }
        m.ll_trace.push_back(ll);
        m.log_likelihood = ll;

        // M-step
        for (int j = 0; j < k; ++j) {
            double nk = 0.0, sx = 0.0, sy = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                nk += resp[i * k + j];
                sx += resp[i * k + j] * pts[i].x;
                sy += resp[i * k + j] * pts[i].y;
            }
            if (nk < 1e-12)
                throw ValidationError("fit_gmm: component " + std::to_string(j) +
                                      " collapsed to zero weight");
            m.weights[j] = nk / n;
            m.means[j] = {sx / nk, sy / nk};
            std::array<double, 3> c = {reg, 0.0, reg};
            for (std::size_t i = 0; i < n; ++i) {
                double dx = pts[i].x - m.means[j][0], dy = pts[i].y - m.means[j][1];
                c[0] += resp[i * k + j] * dx * dx / nk;
                c[1] += resp[i * k + j] * dx * dy / nk;
                c[2] += resp[i * k + j] * dy * dy / nk;
            }
            m.covs[j] = c;
        }

        if (iter > 0 && std::abs(ll - prev_ll) < 1e-6 * std::abs(prev_ll)) break;
        prev_ll = ll;
    }
    return m;
}

}  // namespace

GmmModel fit_gmm(const std::vector<Point2D>& points, int k, std::uint64_t seed, double reg) {
    if (k < 1) throw ValidationError("fit_gmm: K must be >= 1");
    if (static_cast<int>(points.size()) < k)
        throw ValidationError("fit_gmm: " + std::to_string(points.size()) +
                              " points cannot support K=" + std::to_string(k) +
                              "; reduce K");
    if (reg <= 0.0) throw ValidationError("fit_gmm: reg must be > 0");
    if (k > 1) {
        bool all_same = std::all_of(points.begin(), points.end(),
                                    [&](const Point2D& p) { return p == points.front(); });
        if (all_same)
            throw ValidationError("fit_gmm: all points identical, fit collapses for K>1");
    }
    auto pts = to_real(points);
    std::mt19937_64 rng(seed);
    return run_em(pts, seed_centers(pts, k, rng), reg);
}

std::vector<int> hard_assign(const GmmModel& model, const std::vector<Point2D>& points) {
    auto pts = to_real(points);
    std::vector<int> out(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double best = -std::numeric_limits<double>::max();
        int arg = 0;
        for (int j = 0; j < model.k; ++j) {
            double l = std::log(model.weights[j] + 1e-300) +
                       log_gauss2(pts[i], model.means[j], model.covs[j]);
            if (l > best) {
                best = l;
                arg = j;
            }
        }
        out[i] = arg;
    }
    return out;
}

double wss(const GmmModel& model, const std::vector<Point2D>& points) {
    auto assign = hard_assign(model, points);
    // distances to the mean of the assigned points, not the Gaussian mean
    std::vector<double> sx(model.k, 0.0), sy(model.k, 0.0);
    std::vector<long> cnt(model.k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        sx[assign[i]] += points[i].x;
        sy[assign[i]] += points[i].y;
        ++cnt[assign[i]];
    }
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        int j = assign[i];
        double cx = sx[j] / cnt[j], cy = sy[j] / cnt[j];
        double dx = points[i].x - cx, dy = points[i].y - cy;
        total += dx * dx + dy * dy;
    }
    return total;
}

WssCurve wss_curve(const std::vector<Point2D>& points, int k_max, std::uint64_t seed) {
    if (static_cast<int>(points.size()) < k_max)
        throw ValidationError("wss_curve: fewer points than K_max");
    WssCurve curve;
    GmmModel prev_best;
    auto pts = to_real(points);
    for (int k = 1; k <= k_max; ++k) {
        double best_wss = std::numeric_limits<double>::max();
        GmmModel best;
        bool have = false;
        std::string last_error;
        for (int restart = 0; restart < 5; ++restart) {
            try {
                auto m = fit_gmm(points, k,
                                 seed + 1000003ull * static_cast<std::uint64_t>(k) + restart);
                double w = wss(m, points);
                if (!have || w < best_wss) {
                    best_wss = w;
                    best = std::move(m);
                    have = true;
                }
            } catch (const ValidationError& e) {
                last_error = e.what();
            }
        }
        if (k > 1 && prev_best.k == k - 1) {
            // warm start: previous centers plus the worst-covered point
            std::vector<Pt> init(prev_best.k);
            for (int j = 0; j < prev_best.k; ++j)
                init[j] = {prev_best.means[j][0], prev_best.means[j][1]};
            std::size_t far_i = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < pts.size(); ++i) {
                double d = std::numeric_limits<double>::max();
                for (const auto& c : init) {
                    double dx = pts[i].x - c.x, dy = pts[i].y - c.y;
                    d = std::min(d, dx * dx + dy * dy);
                }
                if (d > far_d) {
                    far_d = d;
                    far_i = i;
                }
            }
            init.push_back(pts[far_i]);
            try {
                auto m = run_em(pts, init, 1e-3);
                double w = wss(m, points);
                if (!have || w < best_wss) {
                    best_wss = w;
                    best = std::move(m);
                    have = true;
                }
            } catch (const ValidationError& e) {
                last_error = e.what();
            }
        }
        if (!have) throw ValidationError("wss_curve: all restarts failed at K=" +
                                         std::to_string(k) + ": " + last_error);
        curve.distortions.push_back(best_wss);
        prev_best = std::move(best);
    }
    return curve;
}

int elbow(const WssCurve& curve) {
    const auto& w = curve.distortions;
    if (w.size() < 3) throw ValidationError("elbow: need at least 3 curve entries");
    const std::size_t n = w.size();
    int best_k = 2;
    double best_d = -std::numeric_limits<double>::max();
    for (std::size_t k = 2; k <= n - 1; ++k) {  // interior K, 1-based; w[k-1] = WSS at K=k
        double d = (w[k - 2] - w[k - 1]) - (w[k - 1] - w[k]);
        if (d > best_d) {  // strict: ties go to the smaller K
            best_d = d;
            best_k = static_cast<int>(k);
        }
    }
    return best_k;
}

MetaStack spatial_maps(const StimulusRecord& record, int k, std::uint64_t seed, double reg) {
    FixationMap agg = aggregate_fixation_map(record, false);
    std::vector<Point2D> points;
    points.reserve(static_cast<std::size_t>(agg.count));
    for (int y = 0; y < agg.height; ++y)
        for (int x = 0; x < agg.width; ++x)
            if (agg.at(x, y)) points.push_back({x, y});

    auto model = fit_gmm(points, k, seed, reg);
    auto assign = hard_assign(model, points);

    std::vector<FixationMap> maps(static_cast<std::size_t>(k),
                                  FixationMap(record.width, record.height));
    for (std::size_t i = 0; i < points.size(); ++i)
        maps[static_cast<std::size_t>(assign[i])].set(points[i].x, points[i].y);

    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return maps[a].count > maps[b].count; });

    MetaStack stack;
    stack.stimulus_id = record.stimulus_id;
    stack.mode = StackMode::NonIncremental;
    stack.axis = StackAxis::Spatial;
    for (int idx : order) stack.maps.push_back(std::move(maps[static_cast<std::size_t>(idx)]));
    return stack;
}

}  // namespace salseq
