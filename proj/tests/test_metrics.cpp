#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "salseq/metrics.hpp"
#include "salseq/salmap.hpp"
#include "support.hpp"

using namespace salseq;
namespace M = salseq::metrics;

namespace {

DenseMap dense(int w, int h, std::vector<double> v) {
    DenseMap m(w, h);
    m.values = std::move(v);
    return m;
}

/// Threshold-sweep AUC evaluated the slow way: every distinct positive
/// value as a threshold, >= counts as detected, trapezoid over sorted
/// (FPR, TPR) points with (0,0) and (1,1) anchors.
double brute_auc(const DenseMap& pred, const FixationMap& fix,
                 const std::vector<std::size_t>& negatives) {
    std::vector<double> pos;
    for (std::size_t i = 0; i < fix.grid.size(); ++i)
        if (fix.grid[i]) pos.push_back(pred.values[i]);
    std::vector<std::pair<double, double>> roc = {{0, 0}, {1, 1}};
    for (double thr : pos) {
        double tp = 0, fp = 0;
        for (double v : pos)
            if (v >= thr) ++tp;
        for (std::size_t i : negatives)
            if (pred.values[i] >= thr) ++fp;
        roc.push_back({fp / negatives.size(), tp / pos.size()});
    }
    std::sort(roc.begin(), roc.end());
    double area = 0;
    for (std::size_t i = 1; i < roc.size(); ++i)
        area += (roc[i].first - roc[i - 1].first) * (roc[i].second + roc[i - 1].second) / 2;
    return area;
}

}  // namespace

TEST_CASE("kl of a map against itself is near zero, positive otherwise") {
    std::mt19937_64 rng(2);
    DenseMap p = testsupport::random_dense(rng, 7, 5);
    CHECK(M::kl(p, p) == doctest::Approx(0.0).epsilon(1e-4));
    DenseMap q = testsupport::random_dense(rng, 7, 5);
    CHECK(M::kl(q, p) > 1e-4);
}

TEST_CASE("kl on a 3x3 fixture matches the definition evaluated by hand") {
    DenseMap pred = dense(3, 3, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    DenseMap gt = dense(3, 3, {9, 8, 7, 6, 5, 4, 3, 2, 1});
    double eps = M::kDefaultEps;
    double expected = 0;
    for (int i = 0; i < 9; ++i) {
        double p = pred.values[i] / 45.0;
        double g = gt.values[i] / 45.0;
        expected += g * std::log(eps + g / (eps + p));
    }
    CHECK(M::kl(pred, gt) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("cc basics") {
    DenseMap a = dense(2, 2, {1, 2, 3, 4});
    DenseMap b = dense(2, 2, {2, 4, 6, 8});
    DenseMap c = dense(2, 2, {4, 3, 2, 1});
    CHECK(M::cc(a, b) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(M::cc(a, c) == doctest::Approx(-1.0).epsilon(1e-12));
    std::mt19937_64 rng(4);
    DenseMap x = testsupport::random_dense(rng, 8, 6);
    DenseMap y = testsupport::random_dense(rng, 8, 6);
    CHECK(M::cc(x, y) == doctest::Approx(M::cc(y, x)).epsilon(1e-12));
    // affine invariance
    DenseMap x2 = x;
    for (auto& v : x2.values) v = 3.0 * v + 7.0;
    CHECK(M::cc(x2, y) == doctest::Approx(M::cc(x, y)).epsilon(1e-9));
}

TEST_CASE("sim on the 2x2 fixture is 0.7; identity gives 1") {
    DenseMap a = dense(2, 2, {0.7, 0.3, 0, 0});
    DenseMap b = dense(2, 2, {0.4, 0.6, 0, 0});
    CHECK(M::sim(a, b) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(M::sim(b, a) == doctest::Approx(0.7).epsilon(1e-12));
    std::mt19937_64 rng(5);
    DenseMap x = testsupport::random_dense(rng, 6, 6);
    CHECK(M::sim(x, x) == doctest::Approx(1.0).epsilon(1e-12));
    // scale invariance through normalization
    DenseMap x5 = x;
    for (auto& v : x5.values) v *= 5.0;
    DenseMap y = testsupport::random_dense(rng, 6, 6);
    CHECK(M::sim(x5, y) == doctest::Approx(M::sim(x, y)).epsilon(1e-12));
}

TEST_CASE("nss on a 5x5 fixture matches a hand-computed z-score") {
    std::vector<double> v(25);
    std::iota(v.begin(), v.end(), 1.0);
    DenseMap pred = dense(5, 5, v);
    FixationMap fix(5, 5);
    fix.set(4, 4);  // value 25
    fix.set(0, 0);  // value 1
    double mean = 13.0;
    double var = 0;
    for (double x : v) var += (x - mean) * (x - mean);
    double sd = std::sqrt(var / 25.0);
    double expected = ((25.0 - mean) / sd + (1.0 - mean) / sd) / 2.0;
    CHECK(M::nss(pred, fix) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("nss is invariant to positive affine maps of the prediction") {
    std::mt19937_64 rng(6);
    DenseMap pred = testsupport::random_dense(rng, 10, 8);
    FixationMap fix = testsupport::random_fixmap(rng, 10, 8, 6);
    DenseMap scaled = pred;
    for (auto& x : scaled.values) x = 0.5 * x + 3.0;
    CHECK(M::nss(pred, fix) == doctest::Approx(M::nss(scaled, fix)).epsilon(1e-9));
}

TEST_CASE("auc_judd on a 6x6 fixture matches the brute-force sweep") {
    std::mt19937_64 rng(7);
    DenseMap pred = testsupport::random_dense(rng, 6, 6);
    FixationMap fix = testsupport::random_fixmap(rng, 6, 6, 5);
    std::vector<std::size_t> negatives;
    for (std::size_t i = 0; i < fix.grid.size(); ++i)
        if (!fix.grid[i]) negatives.push_back(i);
    CHECK(M::auc_judd(pred, fix) ==
          doctest::Approx(brute_auc(pred, fix, negatives)).epsilon(1e-9));
}

TEST_CASE("auc behaviors on perfect, inverted, and constant maps") {
    FixationMap fix(6, 6);
    fix.set(2, 2);
    fix.set(3, 3);
    DenseMap good(6, 6, 0.0);
    good.at(2, 2) = 1.0;
    good.at(3, 3) = 0.9;
    CHECK(M::auc_judd(good, fix) == doctest::Approx(1.0).epsilon(1e-12));
    DenseMap flat(6, 6, 0.25);
    CHECK(M::auc_judd(flat, fix) == doctest::Approx(0.5).epsilon(1e-12));
    // inverted map with distinct fixation values: thresholds only exist at
    // the positives, so the area collapses to 0.25
    DenseMap bad(6, 6, 1.0);
    bad.at(2, 2) = 0.1;
    bad.at(3, 3) = 0.2;
    CHECK(M::auc_judd(bad, fix) == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("auc_judd is invariant to monotone transforms") {
    std::mt19937_64 rng(8);
    DenseMap pred = testsupport::random_dense(rng, 9, 9);
    FixationMap fix = testsupport::random_fixmap(rng, 9, 9, 7);
    DenseMap mono = pred;
    for (auto& v : mono.values) v = std::exp(2.0 * v);
    CHECK(M::auc_judd(pred, fix) == doctest::Approx(M::auc_judd(mono, fix)).epsilon(1e-12));
}

TEST_CASE("auc_borji is seed-reproducible and close to judd on large maps") {
    std::mt19937_64 rng(9);
    DenseMap pred = testsupport::random_dense(rng, 40, 30);
    FixationMap fix = testsupport::random_fixmap(rng, 40, 30, 20);
    double a = M::auc_borji(pred, fix, 100, 42);
    double b = M::auc_borji(pred, fix, 100, 42);
    CHECK(a == b);
    double c = M::auc_borji(pred, fix, 100, 43);
    CHECK(a != c);  // different splits, same distribution
    CHECK(std::abs(a - M::auc_judd(pred, fix)) < 0.05);
}

TEST_CASE("sauc penalizes a center prior while judd rewards centered fixations") {
    DenseMap prior = center_prior(40, 40);
    FixationMap fix(40, 40);
    // fixations clustered at the center
    for (int d = -2; d <= 2; ++d) fix.set(20 + d, 20);
    // negatives drawn from an equally central pool from "other images"
    FixationMap other(40, 40);
    for (int d = -2; d <= 2; ++d) {
        other.set(20 + d, 19);
        other.set(20 + d, 21);
    }
    double judd = M::auc_judd(prior, fix);
    double shuffled = M::sauc(prior, fix, other, 100, 11);
    CHECK(judd > 0.9);
    CHECK(shuffled < judd - 0.2);
    CHECK(M::sauc(prior, fix, other, 100, 11) == shuffled);
}

TEST_CASE("info gain fixtures") {
    // pred assigns 4x the baseline's mass to the single fixated cell:
    // exactly 2 bits of gain (eps-corrections cancel to first order)
    DenseMap pred = dense(2, 2, {0.8, 0.2 / 3, 0.2 / 3, 0.2 / 3});
    DenseMap baseline = dense(2, 2, {0.2, 0.8 / 3, 0.8 / 3, 0.8 / 3});
    FixationMap fix(2, 2);
    fix.set(0, 0);
    CHECK(M::info_gain(pred, fix, baseline) == doctest::Approx(2.0).epsilon(1e-5));
    // identical maps: zero gain
    std::mt19937_64 rng(10);
    DenseMap m = testsupport::random_dense(rng, 8, 8);
    FixationMap f = testsupport::random_fixmap(rng, 8, 8, 5);
    CHECK(M::info_gain(m, f, m) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("degenerate inputs raise errors") {
    DenseMap m(4, 4, 0.5);
    FixationMap empty(4, 4);
    CHECK_THROWS_AS(M::nss(m, empty), ValidationError);
    CHECK_THROWS_AS(M::auc_judd(m, empty), ValidationError);
    DenseMap other(5, 5, 0.5);
    FixationMap f(4, 4);
    f.set(1, 1);
    CHECK_THROWS_AS(M::kl(m, other), ValidationError);
    CHECK_THROWS_AS(M::cc(m, other), ValidationError);
}

TEST_CASE("metric report serialization") {
    MetricReport r;
    r.id = "img1";
    r.kl = 0.5;
    r.nss = 1.25;
    std::string header = MetricReport::csv_header();
    CHECK(header.find("kl") != std::string::npos);
    std::string row = r.csv_row();
    CHECK(row.find("img1") != std::string::npos);
    CHECK(row.find("1.25") != std::string::npos);
    std::string js = r.to_json();
    CHECK(js.find("\"nss\"") != std::string::npos);
}
