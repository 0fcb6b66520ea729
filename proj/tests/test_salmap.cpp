#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "salseq/image_io.hpp"
#include "salseq/salmap.hpp"
#include "support.hpp"

using namespace salseq;

TEST_CASE("single centered fixation gives a symmetric unit-peak bump") {
    FixationMap fix(33, 33);
    fix.set(16, 16);
    DenseMap m = blur_fixations(fix, 2.0);  // sigma ~ 3.1 px: wide support
    CHECK(m.at(16, 16) == doctest::Approx(1.0));
    for (int d = 1; d < 10; ++d) {
        CHECK(m.at(16 + d, 16) == doctest::Approx(m.at(16 - d, 16)).epsilon(1e-12));
        CHECK(m.at(16, 16 + d) == doctest::Approx(m.at(16, 16 - d)).epsilon(1e-12));
        CHECK(m.at(16 + d, 16) == doctest::Approx(m.at(16, 16 + d)).epsilon(1e-12));
        CHECK(m.at(16 + d, 16) < m.at(16 + d - 1, 16));
    }
}

TEST_CASE("two distant fixations give equal bumps, order-independent") {
    FixationMap a(64, 64), b(64, 64);
    a.set(12, 12);
    a.set(50, 50);
    b.set(50, 50);
    b.set(12, 12);
    DenseMap ma = blur_fixations(a, 8.0);
    DenseMap mb = blur_fixations(b, 8.0);
    CHECK(ma.values == mb.values);
    CHECK(ma.at(12, 12) == doctest::Approx(ma.at(50, 50)).epsilon(1e-6));
}

TEST_CASE("zero fixation map blurs to the zero map") {
    FixationMap fix(16, 16);
    DenseMap m = blur_fixations(fix, 8.0);
    for (double v : m.values) CHECK(v == 0.0);
}

TEST_CASE("spatial blur matches the DFT-domain oracle") {
    // interior fixation, small sigma relative to the image: border effects
    // are negligible and periodic vs reflective padding agree
    FixationMap fix(64, 64);
    fix.set(32, 30);
    fix.set(20, 40);
    double fc = 8.0;
    DenseMap ours = blur_fixations_raw(fix, fc);
    DenseMap oracle = testsupport::dft_blur_oracle(fix, fc);
    double peak = *std::max_element(oracle.values.begin(), oracle.values.end());
    double max_diff = 0.0;
    for (std::size_t i = 0; i < ours.size(); ++i)
        max_diff = std::max(max_diff, std::abs(ours.values[i] - oracle.values[i]));
    CHECK(max_diff < 1e-3 * peak);
}

TEST_CASE("blur is linear over disjoint fixation sets") {
    std::mt19937_64 rng(3);
    FixationMap a(48, 48), b(48, 48), u(48, 48);
    for (int i = 0; i < 6; ++i) {
        int x = static_cast<int>(rng() % 48), y = static_cast<int>(rng() % 48);
        if (i % 2 == 0 && !b.at(x, y)) {
            a.set(x, y);
            u.set(x, y);
        } else if (!a.at(x, y)) {
            b.set(x, y);
            u.set(x, y);
        }
    }
    DenseMap ma = blur_fixations_raw(a), mb = blur_fixations_raw(b), mu = blur_fixations_raw(u);
    for (std::size_t i = 0; i < mu.size(); ++i)
        CHECK(ma.values[i] + mb.values[i] == doctest::Approx(mu.values[i]).epsilon(1e-9));
}

TEST_CASE("translation equivariance away from borders") {
    FixationMap a(128, 128), b(128, 128);
    a.set(60, 60);
    b.set(63, 58);
    DenseMap ma = blur_fixations_raw(a), mb = blur_fixations_raw(b);
    double sigma = blur_sigma(8.0, 128);
    int margin = static_cast<int>(std::ceil(4 * sigma));
    for (int y = margin; y < 128 - margin - 2; ++y)
        for (int x = margin; x < 128 - margin - 3; ++x)
            CHECK(ma.at(x, y) == doctest::Approx(mb.at(x + 3, y - 2)).epsilon(1e-12));
}

TEST_CASE("normalizations") {
    DenseMap uniform(5, 4, 2.0);
    DenseMap ns = normalize_sum(uniform);
    for (double v : ns.values) CHECK(v == doctest::Approx(1.0 / 20).epsilon(1e-12));

    CHECK_THROWS_AS(zscore(uniform), ValidationError);
    CHECK_THROWS_AS(normalize_range(uniform), ValidationError);
    CHECK_THROWS_AS(normalize_sum(DenseMap(3, 3, 0.0)), ValidationError);

    std::mt19937_64 rng(9);
    DenseMap m = testsupport::random_dense(rng, 9, 7);
    DenseMap s = normalize_sum(m);
    CHECK(std::accumulate(s.values.begin(), s.values.end(), 0.0) ==
          doctest::Approx(1.0).epsilon(1e-12));
    DenseMap r = normalize_range(m);
    CHECK(*std::min_element(r.values.begin(), r.values.end()) == 0.0);
    CHECK(*std::max_element(r.values.begin(), r.values.end()) == 1.0);
    DenseMap z = zscore(m);
    double mean = std::accumulate(z.values.begin(), z.values.end(), 0.0) / z.size();
    double var = 0;
    for (double v : z.values) var += (v - mean) * (v - mean);
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(std::sqrt(var / z.size()) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("pgm round trip and png export") {
    testsupport::TempDir dir("img");
    std::mt19937_64 rng(10);
    DenseMap m = normalize_range(testsupport::random_dense(rng, 12, 9));
    std::string pgm = dir.str() + "/m.pgm";
    write_pgm8(m, pgm);
    DenseMap back = read_pgm(pgm);
    REQUIRE(back.width == 12);
    REQUIRE(back.height == 9);
    for (std::size_t i = 0; i < m.size(); ++i)
        CHECK(back.values[i] == doctest::Approx(m.values[i]).epsilon(0.01));

    std::string png = dir.str() + "/m.png";
    write_png16(m, png);
    std::ifstream in(png, std::ios::binary);
    char sig[8];
    in.read(sig, 8);
    CHECK(static_cast<unsigned char>(sig[0]) == 0x89);
    CHECK(sig[1] == 'P');
}
