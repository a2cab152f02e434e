#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "relfuzz/isa.hpp"

namespace relfuzz::isa {

/// Largest mask an instrumentation AND may use on a memory base register.
inline constexpr std::int64_t kSandboxMask = 0xFFF;

struct Diagnostic {
    std::size_t index = 0;
    std::string message;
};

/// Checks sandbox instrumentation along every forward path:
///  - each register used to address memory (explicit base/index, RSI/RDI of string ops) was
///    last defined by an instrumentation `AND reg, m` with 0 <= m <= 0xFFF,
///  - each DIV has a register divisor last defined by an instrumentation `OR div, k` (k odd)
///    and RD last defined by an instrumentation `AND RD, m` with m < k.
/// An empty result means the program is sandbox-safe.
std::vector<Diagnostic> validate_sandbox(const Program &program);

/// Thrown by engines that refuse programs failing validate_sandbox.
class ProgramInvalid : public std::runtime_error {
  public:
    explicit ProgramInvalid(const std::vector<Diagnostic> &diagnostics);
    const std::vector<Diagnostic> &diagnostics() const { return diagnostics_; }

  private:
    std::vector<Diagnostic> diagnostics_;
};

void require_valid(const Program &program);

}  // namespace relfuzz::isa
