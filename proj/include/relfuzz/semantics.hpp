///
/// File: Architectural semantics of the reduced ISA.
///
///       One implementation serves the contract model, the dependency tracker and the DUT
///       simulator. Flags follow the x86 SDM where it defines them; where the SDM leaves a flag
///       undefined we pick a fixed behaviour:
///         - MUL/IMUL set ZF and SF from the (low) result,
///         - DIV, BT*, BSF and BSR leave the flags they do not define unchanged,
///         - BSF/BSR leave the destination unchanged when the source is zero,
///         - CMOVcc does not write its destination when the condition is false,
///         - bit offsets of BT* wrap to the operand width, also for memory operands.
///
#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "relfuzz/isa.hpp"

namespace relfuzz::isa {

struct StepLimits {
    /// Upper bound on REPE/REPNE iterations executed by this step. A truncated string op
    /// leaves the count register non-zero; only speculative engines use this.
    std::size_t max_string_iterations = std::numeric_limits<std::size_t>::max();
};

struct StepInfo {
    std::size_t string_iterations = 0;
    /// String op stopped because the count register reached zero (not on its condition).
    bool count_exhausted = false;
};

struct StepOutcome {
    ArchState state;
    std::vector<ArchEvent> events;
};

/// In-place step. Appends events to `events` when non-null. Throws DivideFault.
StepInfo execute(ArchState &state, const Instruction &instr, std::vector<ArchEvent> *events,
                 const StepLimits &limits = {});

/// Pure step: returns the successor state and the events of one instruction.
StepOutcome arch_step(const ArchState &state, const Instruction &instr);

/// Read and write sets of `instr` executed in `state`; memory bytes are resolved concretely.
ReadWriteSets read_write_sets(const Instruction &instr, const ArchState &state);

/// Register, flag and PC part of the read/write sets plus the memory bytes named by `events`.
/// Used by engines that already executed the instruction.
ReadWriteSets read_write_sets(const Instruction &instr, const std::vector<ArchEvent> &events);

bool eval_cond(Cond cond, const Flags &flags);
/// Flags a condition code reads.
std::vector<Flag> cond_flags(Cond cond);

/// Page offset of a memory operand in `state`.
std::size_t effective_offset(const MemOperand &mem, const ArchState &state);

/// Little-endian load/store of `size` bytes, wrapping inside the page.
std::uint64_t load_bytes(const Memory &memory, std::size_t offset, unsigned size);
void store_bytes(Memory &memory, std::size_t offset, unsigned size, std::uint64_t value);

/// Registers read to form the addresses of the instruction's memory accesses.
std::vector<Reg> address_registers(const Instruction &instr);

/// Number of micro-ops one architectural execution of `instr` is accounted as
/// (string ops are accounted per iteration by the caller).
unsigned uop_cost(const Instruction &instr);

}  // namespace relfuzz::isa
