#include <doctest.h>

#include <cmath>

#include "salseq/gradcheck.hpp"
#include "salseq/losses.hpp"
#include "salseq/metrics.hpp"
#include "support.hpp"

using namespace salseq;
namespace L = salseq::losses;

namespace {

DenseMap random_map(std::uint64_t seed, int w = 6, int h = 6) {
    std::mt19937_64 rng(seed);
    return testsupport::random_dense(rng, w, h);
}

FixationMap random_fix(std::uint64_t seed, int w = 6, int h = 6, int n = 5) {
    std::mt19937_64 rng(seed);
    return testsupport::random_fixmap(rng, w, h, n);
}

}  // namespace

TEST_CASE("graph losses agree with the plain metric values") {
    DenseMap pred = random_map(1), gt = random_map(2);
    FixationMap fix = random_fix(3);
    ag::Var p = L::from_dense(pred);
    CHECK(ag::scalar(L::kl_loss(p, gt)) ==
          doctest::Approx(metrics::kl(pred, gt)).epsilon(1e-10));
    CHECK(ag::scalar(L::cc_loss(p, gt)) ==
          doctest::Approx(1.0 - metrics::cc(pred, gt)).epsilon(1e-10));
    CHECK(ag::scalar(L::sim_loss(p, gt)) ==
          doctest::Approx(1.0 - metrics::sim(pred, gt)).epsilon(1e-10));
    CHECK(ag::scalar(L::nss_loss(p, fix)) ==
          doctest::Approx(-metrics::nss(pred, fix)).epsilon(1e-10));
}

TEST_CASE("combined loss recombines the weighted components") {
    DenseMap s1 = random_map(11), s2 = random_map(12), s3 = random_map(13), s4 = random_map(14);
    DenseMap gt = random_map(15);
    FixationMap fix = random_fix(16);
    LossWeights w;
    double expected = w.alpha * L::l_kl(s1, gt) + w.beta * L::l_cc(s2, gt) +
                      w.gamma * L::l_sim(s3, gt) + w.delta * L::l_nss(s4, fix);
    CHECK(L::l_sal(s1, s2, s3, s4, gt, fix, w) == doctest::Approx(expected).epsilon(1e-12));

    std::array<ag::Var, 4> s = {L::from_dense(s1), L::from_dense(s2), L::from_dense(s3),
                                L::from_dense(s4)};
    CHECK(ag::scalar(L::sal_loss(s, gt, fix, w)) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("combined loss is linear in the weights") {
    DenseMap s1 = random_map(21), s2 = random_map(22), s3 = random_map(23), s4 = random_map(24);
    DenseMap gt = random_map(25);
    FixationMap fix = random_fix(26);
    LossWeights w1{1, 0, 0, 0, 0}, w2{0, 2, 3, 0, 0}, w3{1, 2, 3, 0, 0};
    CHECK(L::l_sal(s1, s2, s3, s4, gt, fix, w1) + L::l_sal(s1, s2, s3, s4, gt, fix, w2) ==
          doctest::Approx(L::l_sal(s1, s2, s3, s4, gt, fix, w3)).epsilon(1e-12));
    LossWeights zero{0, 0, 0, 0, 0};
    CHECK_THROWS_AS(L::l_sal(s1, s2, s3, s4, gt, fix, zero), ValidationError);
}

TEST_CASE("auxiliary loss averages -NSS over non-empty maps only") {
    DenseMap o1 = random_map(31), o2 = random_map(32), o3 = random_map(33);
    FixationMap m1 = random_fix(34), m3 = random_fix(36);
    FixationMap m2(6, 6);  // empty, skipped
    double expected = (-metrics::nss(o1, m1) - metrics::nss(o3, m3)) / 2.0;
    CHECK(L::l_aux({o1, o2, o3}, {m1, m2, m3}) == doctest::Approx(expected).epsilon(1e-12));
    std::vector<ag::Var> outs = {L::from_dense(o1), L::from_dense(o2), L::from_dense(o3)};
    CHECK(ag::scalar(L::aux_loss(outs, {m1, m2, m3})) ==
          doctest::Approx(expected).epsilon(1e-10));
    CHECK_THROWS_AS(L::l_aux({o1}, {FixationMap(6, 6)}), ValidationError);
}

TEST_CASE("loss gradients pass a central-difference check") {
    DenseMap pred = random_map(41), gt = random_map(42);
    FixationMap fix = random_fix(43);
    ag::Var p = L::from_dense(pred);

    auto run = [&](const std::string& name,
                   const std::function<ag::Var(ag::Var)>& loss) {
        ag::GradCheckResult res = ag::check_gradients(
            name, {p}, [&](const std::vector<ag::Var>& leaves) { return loss(leaves[0]); },
            1e-4);
        INFO(name, " max_err=", res.max_err);
        CHECK(res.passed);
    };
    run("kl", [&](ag::Var v) { return L::kl_loss(v, gt); });
    run("cc", [&](ag::Var v) { return L::cc_loss(v, gt); });
    run("sim", [&](ag::Var v) { return L::sim_loss(v, gt); });
    run("nss", [&](ag::Var v) { return L::nss_loss(v, fix); });
}

TEST_CASE("combined and auxiliary loss gradients pass a central-difference check") {
    std::array<DenseMap, 4> maps = {random_map(51), random_map(52), random_map(53),
                                    random_map(54)};
    DenseMap gt = random_map(55);
    FixationMap fix = random_fix(56);
    LossWeights w;
    std::vector<ag::Var> leaves;
    for (const auto& m : maps) leaves.push_back(L::from_dense(m));
    ag::GradCheckResult res = ag::check_gradients(
        "sal", leaves,
        [&](const std::vector<ag::Var>& v) {
            return L::sal_loss({v[0], v[1], v[2], v[3]}, gt, fix, w);
        },
        1e-4);
    INFO("sal max_err=", res.max_err);
    CHECK(res.passed);

    FixationMap m1 = random_fix(57), m2 = random_fix(58);
    std::vector<ag::Var> outs = {L::from_dense(random_map(59)), L::from_dense(random_map(60))};
    ag::GradCheckResult aux = ag::check_gradients(
        "aux", outs,
        [&](const std::vector<ag::Var>& v) { return L::aux_loss(v, {m1, m2}); }, 1e-4);
    INFO("aux max_err=", aux.max_err);
    CHECK(aux.passed);
}
