#include "salseq/metastack.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "salseq/image_io.hpp"

namespace salseq {

std::string to_string(StackMode m) {
    return m == StackMode::Incremental ? "incremental" : "non-incremental";
}

std::string to_string(StackAxis a) {
    return a == StackAxis::Temporal ? "temporal" : "spatial";
}

StackMode stack_mode_from_string(const std::string& s) {
    if (s == "incremental") return StackMode::Incremental;
    if (s == "non-incremental") return StackMode::NonIncremental;
    throw ValidationError("unknown stack mode '" + s + "'");
}

StackAxis stack_axis_from_string(const std::string& s) {
    if (s == "temporal") return StackAxis::Temporal;
    if (s == "spatial") return StackAxis::Spatial;
    throw ValidationError("unknown stack axis '" + s + "'");
}

namespace {

FixationMap or_maps(const FixationMap& a, const FixationMap& b) {
    FixationMap out(a.width, a.height);
    for (std::size_t i = 0; i < a.grid.size(); ++i) {
        if (a.grid[i] || b.grid[i]) {
            out.grid[i] = 1;
            ++out.count;
        }
    }
    return out;
}

bool subset(const FixationMap& small, const FixationMap& big) {
    for (std::size_t i = 0; i < small.grid.size(); ++i)
        if (small.grid[i] && !big.grid[i]) return false;
    return true;
}

}  // namespace

FixationMap stack_union(const MetaStack& stack) {
    if (stack.maps.empty()) return {};
    FixationMap acc(stack.maps.front().width, stack.maps.front().height);
    for (const auto& m : stack.maps) acc = or_maps(acc, m);
    return acc;
}

MetaStack to_incremental(const MetaStack& stack) {
    if (stack.mode == StackMode::Incremental)
        throw ValidationError("to_incremental: stack is already incremental");
    MetaStack out;
    out.stimulus_id = stack.stimulus_id;
    out.mode = StackMode::Incremental;
    out.axis = stack.axis;
    if (stack.maps.size() <= 1) return out;  // degenerate: union-of-all is omitted
    FixationMap acc = stack.maps.front();
    out.maps.push_back(acc);
    for (std::size_t t = 1; t + 1 < stack.maps.size(); ++t) {
        acc = or_maps(acc, stack.maps[t]);
        out.maps.push_back(acc);
    }
    return out;
}

bool StackReport::all_passed() const {
    for (const auto& c : checks)
        if (!c.passed) return false;
    return true;
}

StackReport validate_stack(const MetaStack& stack, const FixationMap& aggregate) {
    StackReport rep;
    auto add = [&](std::string name, bool ok, std::string detail = "") {
        rep.checks.push_back({std::move(name), ok, std::move(detail)});
    };

    bool shapes_ok = true;
    for (const auto& m : stack.maps) {
        if (m.width != aggregate.width || m.height != aggregate.height) shapes_ok = false;
    }
    add("shape-consistency", shapes_ok,
        shapes_ok ? "" : "map dimensions differ from aggregate");

    if (stack.mode == StackMode::Incremental) {
        bool mono = true;
        std::size_t bad_t = 0;
        for (std::size_t t = 1; t < stack.maps.size(); ++t) {
            if (!subset(stack.maps[t - 1], stack.maps[t])) {
                mono = false;
                bad_t = t;
                break;
            }
        }
        add("incremental-monotonicity", mono,
            mono ? "" : "map " + std::to_string(bad_t) + " does not contain map " +
                            std::to_string(bad_t - 1));
    }
    if (stack.mode == StackMode::NonIncremental && stack.axis == StackAxis::Spatial) {
        bool disjoint = true;
        for (std::size_t a = 0; a < stack.maps.size() && disjoint; ++a) {
            for (std::size_t b = a + 1; b < stack.maps.size() && disjoint; ++b) {
                for (std::size_t i = 0; i < stack.maps[a].grid.size(); ++i) {
                    if (stack.maps[a].grid[i] && stack.maps[b].grid[i]) {
                        disjoint = false;
                        break;
                    }
                }
            }
        }
        add("spatial-disjointness", disjoint, disjoint ? "" : "maps overlap");
    }

    FixationMap u = stack_union(stack);
    bool or_ok = !stack.maps.empty() && shapes_ok && u.grid == aggregate.grid;
    // Incremental stacks omit the final union map, so OR-consistency means
    // "union is a subset of the aggregate" there.
    if (stack.mode == StackMode::Incremental && shapes_ok && !stack.maps.empty())
        or_ok = subset(u, aggregate);
    add("or-consistency", or_ok, or_ok ? "" : "stack union does not match aggregate map");

    bool counts_ok = true;
    for (const auto& m : stack.maps) {
        int n = 0;
        for (auto c : m.grid) n += c ? 1 : 0;
        if (n != m.count) counts_ok = false;
    }
    add("count-consistency", counts_ok, counts_ok ? "" : "stored count differs from grid");
    return rep;
}

void write_stack(const MetaStack& stack, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    for (std::size_t t = 0; t < stack.maps.size(); ++t) {
        std::ostringstream name;
        name << stack.stimulus_id << "_t" << std::setw(2) << std::setfill('0') << t << ".pgm";
        write_pgm8(stack.maps[t], (fs::path(dir) / name.str()).string());
    }
    nlohmann::ordered_json sidecar;
    sidecar["mode"] = to_string(stack.mode);
    sidecar["axis"] = to_string(stack.axis);
    sidecar["T"] = stack.maps.size();
    std::ofstream out(fs::path(dir) / (stack.stimulus_id + "_stack.json"));
    if (!out) throw ParseError("cannot write stack sidecar in '" + dir + "'");
    out << sidecar.dump(2) << "\n";
}

}  // namespace salseq
