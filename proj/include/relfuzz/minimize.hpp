///
/// File: Test-case minimization by single-instruction deletion.
///
///       Instructions are tried front to back; a deletion that keeps the program sandbox-valid
///       and the predicate true is kept and the scan restarts from the front. The instrumentation
///       run directly in front of an instruction is deleted together with it. The result is
///       1-minimal: deleting any one remaining non-instrumentation instruction either breaks the
///       sandbox or falsifies the predicate.
///
#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "relfuzz/input.hpp"
#include "relfuzz/isa.hpp"

namespace relfuzz::minimize {

using Predicate = std::function<bool(const isa::Program &, const std::vector<InputData> &)>;

class PredicateUnstable : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// The program without instruction `index` and the instrumentation run in front of it.
/// Labels pointing past the removed range move with their instruction.
isa::Program remove_instruction(const isa::Program &program, std::size_t index);

/// Indices of the non-instrumentation instructions, the deletion candidates.
std::vector<std::size_t> candidates(const isa::Program &program);

/// Throws PredicateUnstable if the predicate does not hold for the input program.
isa::Program minimize(const isa::Program &program, const std::vector<InputData> &inputs,
                      const Predicate &predicate);

}  // namespace relfuzz::minimize
