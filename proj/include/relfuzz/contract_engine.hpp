/// Execution core shared by the contract model and the dependency tracker.
///
/// A Hooks type provides
///   void step(const isa::Instruction &, const isa::ArchState &before,
///             const std::vector<isa::ArchEvent> &events, bool transient);
///   void begin_speculation();
///   void end_speculation();
/// step() is called after every executed instruction, architectural or transient.
#pragma once

#include <algorithm>
#include <vector>

#include "relfuzz/contract.hpp"
#include "relfuzz/semantics.hpp"

namespace relfuzz::contract::detail {

template <class Hooks>
class Engine {
  public:
    Engine(const ContractSpec &spec, const isa::Program &program, Hooks &hooks)
        : spec_(spec), program_(program), hooks_(hooks)
    {
    }

    /// Architectural run from state.pc to the end of the program.
    void run(isa::ArchState &state)
    {
        std::vector<isa::ArchEvent> events;
        while (state.pc < program_.size()) {
            const auto &instr = program_.instructions[state.pc];
            maybe_speculate(state, instr, 0, nullptr);
            const auto before = state;
            events.clear();
            isa::execute(state, instr, &events);
            hooks_.step(instr, before, events, false);
        }
    }

  private:
    /// Explores the wrong target of a conditional branch at nesting `depth`.
    /// `budget` is the remaining window of an enclosing transaction, if any.
    void maybe_speculate(const isa::ArchState &state, const isa::Instruction &instr,
                         std::size_t depth, std::size_t *budget)
    {
        if (spec_.execution != ExecutionClause::Cond || !instr.is_conditional_branch() ||
            depth >= spec_.max_nesting)
            return;
        isa::ArchState wrong = state;
        const bool taken = isa::eval_cond(instr.cond, state.flags);
        wrong.pc = taken ? state.pc + 1 : std::get<isa::LabelRef>(instr.operands[0]).target;

        std::size_t own_budget = spec_.speculation_window;
        hooks_.begin_speculation();
        transient_run(wrong, depth + 1, budget ? *budget : own_budget);
        hooks_.end_speculation();
    }

    void transient_run(isa::ArchState &state, std::size_t depth, std::size_t &budget)
    {
        std::vector<isa::ArchEvent> events;
        while (state.pc < program_.size() && budget > 0) {
            const auto &instr = program_.instructions[state.pc];
            if (instr.is_fence())
                return;
            maybe_speculate(state, instr, depth, &budget);
            if (budget == 0)
                return;
            const auto before = state;
            events.clear();
            isa::StepInfo info;
            try {
                info = isa::execute(state, instr, &events, isa::StepLimits{budget});
            } catch (const isa::DivideFault &) {
                return;
            }
            hooks_.step(instr, before, events, true);
            const std::size_t used =
                instr.is_string_op() ? std::max<std::size_t>(1, info.string_iterations) : 1;
            budget -= std::min(used, budget);
        }
    }

    const ContractSpec &spec_;
    const isa::Program &program_;
    Hooks &hooks_;
};

/// Contract observations of one executed instruction.
inline void append_observations(const std::vector<isa::ArchEvent> &events, bool transient,
                                std::vector<Observation> &out)
{
    for (const auto &ev : events) {
        if (const auto *r = std::get_if<isa::MemRead>(&ev))
            out.push_back({Observation::Kind::Load, r->offset, transient});
        else if (const auto *w = std::get_if<isa::MemWrite>(&ev))
            out.push_back({Observation::Kind::Store, w->offset, transient});
        else
            out.push_back({Observation::Kind::PcTarget, std::get<isa::Branch>(ev).next_pc, transient});
    }
}

}  // namespace relfuzz::contract::detail
