#include "relfuzz/contract.hpp"

#include "relfuzz/contract_engine.hpp"
#include "relfuzz/hash.hpp"
#include "relfuzz/sandbox.hpp"

namespace relfuzz::contract {

namespace {

struct TraceHooks {
    CTrace trace;
    std::size_t steps = 0;

    void step(const isa::Instruction &, const isa::ArchState &,
              const std::vector<isa::ArchEvent> &events, bool transient)
    {
        ++steps;
        detail::append_observations(events, transient, trace.observations);
    }
    void begin_speculation() {}
    void end_speculation() {}
};

}  // namespace

std::string to_string(ExecutionClause c) { return c == ExecutionClause::Seq ? "seq" : "cond"; }

std::string Observation::to_string() const
{
    switch (kind) {
    case Kind::Load: return "load *" + std::to_string(value);
    case Kind::Store: return "store *" + std::to_string(value);
    case Kind::PcTarget: return "jump @" + std::to_string(value);
    }
    return "?";
}

std::string CTrace::canonical_text() const
{
    std::string out;
    for (const auto &o : observations) {
        out += o.to_string();
        out += '\n';
    }
    return out;
}

std::uint64_t CTrace::hash() const { return fnv1a64(canonical_text()); }

ContractModel::ContractModel(ContractSpec spec, const isa::Program &program)
    : spec_(spec), program_(program)
{
    isa::require_valid(program_);
}

ContractRun ContractModel::run(const InputData &input) const
{
    TraceHooks hooks;
    ContractRun out{{}, input.to_state()};
    detail::Engine<TraceHooks> engine(spec_, program_, hooks);
    engine.run(out.final_state);
    out.trace = std::move(hooks.trace);
    out.steps = hooks.steps;
    return out;
}

CTrace ContractModel::trace(const InputData &input) const { return run(input).trace; }

CTrace collect_ctrace(const ContractSpec &spec, const isa::Program &program, const InputData &input)
{
    return ContractModel(spec, program).trace(input);
}

}  // namespace relfuzz::contract
