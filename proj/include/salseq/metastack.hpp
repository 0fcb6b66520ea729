#pragma once

#include <string>
#include <vector>

#include "salseq/fixdata.hpp"

namespace salseq {

enum class StackMode { Incremental, NonIncremental };
enum class StackAxis { Temporal, Spatial };

std::string to_string(StackMode m);
std::string to_string(StackAxis a);
StackMode stack_mode_from_string(const std::string& s);
StackAxis stack_axis_from_string(const std::string& s);

/// Ordered sequence of fixation maps for one stimulus. Non-incremental
/// stacks hold per-step maps m_0..m_T; incremental stacks hold cumulative
/// unions and are cellwise monotone in t.
struct MetaStack {
    std::string stimulus_id;
    StackMode mode = StackMode::NonIncremental;
    StackAxis axis = StackAxis::Temporal;
    std::vector<FixationMap> maps;
};

/// Cumulative-union transform: output map t is the cellwise OR of input
/// maps 0..t for t = 0..T-1. The union of all T+1 inputs is omitted since
/// it coincides with the aggregate map the final prediction is trained on,
/// so the output has one map fewer than the input.
/// Throws ValidationError when the input is already incremental.
MetaStack to_incremental(const MetaStack& stack);

struct StackCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct StackReport {
    std::vector<StackCheck> checks;
    bool all_passed() const;
};

/// Runs the mode/axis invariants plus OR-consistency against the supplied
/// aggregate map. Reports, never throws.
StackReport validate_stack(const MetaStack& stack, const FixationMap& aggregate);

/// Cellwise OR of all maps in the stack.
FixationMap stack_union(const MetaStack& stack);

/// Serializes one 8-bit PGM per timestep (<stimulus_id>_tNN.pgm) plus a
/// JSON sidecar {mode, axis, T} into dir.
void write_stack(const MetaStack& stack, const std::string& dir);

}  // namespace salseq
