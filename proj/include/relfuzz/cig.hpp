///
/// File: Contract-driven input generation.
///
///       Siblings of an input keep every location in Dep(program, input) and redraw every other
///       register, flag and memory byte from the entropy range, so they land in the same
///       contract-equivalence class as the original.
///
#pragma once

#include <cstdint>
#include <vector>

#include "relfuzz/contract.hpp"
#include "relfuzz/deps.hpp"
#include "relfuzz/input.hpp"

namespace relfuzz::cig {

struct BoostResult {
    std::vector<InputData> siblings;  // k - 1 inputs
    /// Dep left no location to mutate; the siblings are exact copies.
    bool degenerate = false;
    deps::DepSet deps;
    contract::CTrace trace;  // of the original input
};

/// One dependency-tracking pass, then k - 1 siblings. Deterministic in `seed`.
BoostResult boost(const contract::ContractModel &model, const InputData &input, std::size_t k,
                  std::uint64_t seed, unsigned entropy_bits);

BoostResult boost(const contract::ContractSpec &spec, const isa::Program &program,
                  const InputData &input, std::size_t k, std::uint64_t seed,
                  unsigned entropy_bits);

/// Redraws every location outside `deps` and forces at least one of them to change.
/// Returns false (and leaves a copy) when no location outside `deps` can change.
bool mutate_outside(const InputData &input, const deps::DepSet &deps, Rng &rng,
                    unsigned entropy_bits, InputData &out);

/// Share of traces that have at least one equal partner in the list.
double effectiveness(const std::vector<contract::CTrace> &traces);

}  // namespace relfuzz::cig
