///
/// File: Dependency tracking over contract-model runs.
///
///       A dependency map assigns every location the set of initial-state locations its current
///       value may depend on. Initially each location depends on itself. After each step every
///       written location gets DMap(PC) joined with the maps of everything the step read. Each
///       observation adds DMap(PC) and the maps of the locations that determine the observed
///       value (address registers, branch flags, or the whole read set of a string op) to Dep.
///       A transaction explored on a contract-level wrong path works on a copy of the map that is
///       dropped at rollback.
///
#pragma once

#include <vector>

#include "relfuzz/contract.hpp"
#include "relfuzz/input.hpp"
#include "relfuzz/isa.hpp"

namespace relfuzz::deps {

/// Sorted input locations; never contains PC.
using DepSet = std::vector<isa::Location>;

struct TrackedRun {
    contract::CTrace trace;
    DepSet deps;
};

/// Contract trace and Dep(program, input) from one instrumented run.
TrackedRun track(const contract::ContractModel &model, const InputData &input);

/// Validates the program, then returns Dep(program, input).
DepSet trace_dependencies(const contract::ContractSpec &spec, const isa::Program &program,
                          const InputData &input);

/// Location names, e.g. {"RA", "ZF", "mem[16]"}.
std::vector<std::string> names(const DepSet &deps);

}  // namespace relfuzz::deps
