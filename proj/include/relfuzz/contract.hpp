///
/// File: Executable leakage contracts (CT-SEQ and CT-COND).
///
///       The CT observation clause exposes the address of every load and store and the
///       resolved target of every control-flow instruction. Under COND the model explores the
///       wrong target of each conditional branch first, for up to `speculation_window`
///       instructions, then rolls back and continues on the correct target. Observations made
///       on the wrong path stay in the trace.
///
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "relfuzz/input.hpp"
#include "relfuzz/isa.hpp"

namespace relfuzz::contract {

enum class ObservationClause : std::uint8_t { CT };
enum class ExecutionClause : std::uint8_t { Seq, Cond };

struct ContractSpec {
    ObservationClause observation = ObservationClause::CT;
    ExecutionClause execution = ExecutionClause::Seq;
    std::size_t speculation_window = 250;
    std::size_t max_nesting = 1;
};

std::string to_string(ExecutionClause c);

struct Observation {
    enum class Kind : std::uint8_t { Load, Store, PcTarget };
    Kind kind = Kind::Load;
    std::size_t value = 0;  // page offset or instruction index
    /// Made on a contract-level wrong path. Metadata only: not part of equality or text.
    bool transient = false;

    std::string to_string() const;
    friend bool operator==(const Observation &a, const Observation &b)
    {
        return a.kind == b.kind && a.value == b.value;
    }
};

struct CTrace {
    std::vector<Observation> observations;

    /// One observation per line, e.g. "load *5", "store *16", "jump @3".
    std::string canonical_text() const;
    /// FNV-1a of canonical_text().
    std::uint64_t hash() const;
    bool empty() const { return observations.empty(); }

    friend bool operator==(const CTrace &, const CTrace &) = default;
};

struct ContractRun {
    CTrace trace;
    isa::ArchState final_state;
    std::size_t steps = 0;  // instructions executed, wrong paths included
};

/// A contract model bound to one program; the program is validated once, on construction.
class ContractModel {
  public:
    /// Throws isa::ProgramInvalid.
    ContractModel(ContractSpec spec, const isa::Program &program);

    CTrace trace(const InputData &input) const;
    ContractRun run(const InputData &input) const;

    const ContractSpec &spec() const { return spec_; }
    const isa::Program &program() const { return program_; }

  private:
    ContractSpec spec_;
    const isa::Program &program_;
};

/// Convenience wrapper: validates, then traces.
CTrace collect_ctrace(const ContractSpec &spec, const isa::Program &program,
                      const InputData &input);

}  // namespace relfuzz::contract
