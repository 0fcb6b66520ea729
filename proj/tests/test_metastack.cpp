#include <doctest.h>

#include <algorithm>

#include "salseq/metastack.hpp"
#include "salseq/tempseq.hpp"
#include "support.hpp"

using namespace salseq;

namespace {

FixationMap map_with(int w, int h, std::initializer_list<std::pair<int, int>> pts) {
    FixationMap m(w, h);
    for (auto [x, y] : pts) m.set(x, y);
    return m;
}

MetaStack nonincr(std::vector<FixationMap> maps) {
    MetaStack s;
    s.stimulus_id = "s";
    s.mode = StackMode::NonIncremental;
    s.axis = StackAxis::Temporal;
    s.maps = std::move(maps);
    return s;
}

}  // namespace

TEST_CASE("to_incremental accumulates and drops the final union") {
    auto a = map_with(8, 8, {{0, 0}});
    auto b = map_with(8, 8, {{1, 1}});
    auto c = map_with(8, 8, {{2, 2}});
    MetaStack inc = to_incremental(nonincr({a, b, c}));
    REQUIRE(inc.maps.size() == 2);
    CHECK(inc.mode == StackMode::Incremental);
    CHECK(inc.maps[0].grid == a.grid);
    auto ab = map_with(8, 8, {{0, 0}, {1, 1}});
    CHECK(inc.maps[1].grid == ab.grid);
}

TEST_CASE("single-map stack yields an empty incremental stack") {
    MetaStack inc = to_incremental(nonincr({map_with(4, 4, {{1, 1}})}));
    CHECK(inc.maps.empty());
}

TEST_CASE("double accumulation is rejected") {
    MetaStack inc = to_incremental(nonincr({map_with(4, 4, {{0, 0}}), map_with(4, 4, {{1, 1}})}));
    CHECK_THROWS_AS(to_incremental(inc), ValidationError);
}

TEST_CASE("incremental count is one less, reconstruction identity holds") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<FixationMap> maps;
        for (int t = 0; t < 5; ++t) maps.push_back(testsupport::random_fixmap(rng, 16, 12, 6));
        MetaStack ni = nonincr(maps);
        MetaStack inc = to_incremental(ni);
        CHECK(inc.maps.size() == ni.maps.size() - 1);
        // OR of the last incremental map with the last non-incremental map
        // recovers the union of all inputs
        FixationMap full = stack_union(ni);
        FixationMap recon(16, 12);
        for (std::size_t i = 0; i < recon.grid.size(); ++i)
            recon.grid[i] = (inc.maps.back().grid[i] || ni.maps.back().grid[i]) ? 1 : 0;
        CHECK(recon.grid == full.grid);
        // monotone by construction
        for (std::size_t t = 1; t < inc.maps.size(); ++t)
            for (std::size_t i = 0; i < inc.maps[t].grid.size(); ++i)
                CHECK(inc.maps[t - 1].grid[i] <= inc.maps[t].grid[i]);
    }
}

TEST_CASE("to_incremental is idempotent in effect") {
    std::mt19937_64 rng(23);
    std::vector<FixationMap> maps;
    for (int t = 0; t < 4; ++t) maps.push_back(testsupport::random_fixmap(rng, 10, 10, 5));
    MetaStack ni = nonincr(maps);
    MetaStack inc = to_incremental(ni);

    // rebuild a non-incremental form whose running unions equal inc, then
    // re-accumulate: the incremental maps must be reproduced
    std::vector<FixationMap> rebuilt;
    rebuilt.push_back(inc.maps[0]);
    for (std::size_t t = 1; t < inc.maps.size(); ++t) {
        FixationMap diff(10, 10);
        for (std::size_t i = 0; i < diff.grid.size(); ++i)
            if (inc.maps[t].grid[i] && !inc.maps[t - 1].grid[i]) diff.set(
                static_cast<int>(i % 10), static_cast<int>(i / 10));
        rebuilt.push_back(diff);
    }
    rebuilt.push_back(ni.maps.back());  // terminal map, dropped again below
    MetaStack inc2 = to_incremental(nonincr(rebuilt));
    REQUIRE(inc2.maps.size() == inc.maps.size());
    for (std::size_t t = 0; t < inc.maps.size(); ++t)
        CHECK(inc2.maps[t].grid == inc.maps[t].grid);
}

TEST_CASE("validate_stack passes a correct temporal stack") {
    std::mt19937_64 rng(29);
    StimulusRecord rec = testsupport::random_record(rng, 64, 48, 8, 25, "r");
    MetaStack stack = temporal_maps(rec, TemporalScheme::salicon());
    FixationMap agg = aggregate_fixation_map(rec, false);
    StackReport rep = validate_stack(stack, agg);
    CHECK(rep.all_passed());
}

TEST_CASE("validate_stack flags a zeroed map") {
    std::mt19937_64 rng(31);
    StimulusRecord rec = testsupport::random_record(rng, 64, 48, 8, 25, "r");
    MetaStack stack = temporal_maps(rec, TemporalScheme::salicon());
    stack.maps[0] = FixationMap(64, 48);
    FixationMap agg = aggregate_fixation_map(rec, false);
    StackReport rep = validate_stack(stack, agg);
    bool or_failed = false;
    for (const auto& c : rep.checks)
        if (c.name == "or-consistency" && !c.passed) or_failed = true;
    CHECK(or_failed);
}

TEST_CASE("validate_stack flags shuffled incremental maps") {
    std::mt19937_64 rng(37);
    std::vector<FixationMap> maps;
    for (int t = 0; t < 6; ++t) maps.push_back(testsupport::random_fixmap(rng, 20, 20, 8));
    MetaStack inc = to_incremental(nonincr(maps));
    std::reverse(inc.maps.begin(), inc.maps.end());
    StackReport rep = validate_stack(inc, stack_union(inc));
    bool mono_failed = false;
    for (const auto& c : rep.checks)
        if (c.name == "incremental-monotonicity" && !c.passed) mono_failed = true;
    CHECK(mono_failed);
}

TEST_CASE("write_stack emits PGMs and a sidecar") {
    testsupport::TempDir dir("stack");
    MetaStack st = nonincr({map_with(6, 4, {{1, 1}}), map_with(6, 4, {{2, 2}})});
    write_stack(st, dir.str());
    CHECK(std::filesystem::exists(dir.path() / "s_t00.pgm"));
    CHECK(std::filesystem::exists(dir.path() / "s_t01.pgm"));
    CHECK(std::filesystem::exists(dir.path() / "s_stack.json"));
}
