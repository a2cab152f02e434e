#include "relfuzz/deps.hpp"

#include <algorithm>
#include <bitset>

#include "relfuzz/contract_engine.hpp"

namespace relfuzz::deps {

using isa::Location;

namespace {

using LocSet = std::vector<std::uint16_t>;  // sorted ids

class DepHooks {
  public:
    DepHooks() : map_(Location::kCount) {}

    void step(const isa::Instruction &instr, const isa::ArchState &,
              const std::vector<isa::ArchEvent> &events, bool transient)
    {
        const auto rw = isa::read_write_sets(instr, events);

        if (!events.empty()) {
            collect(Location::pc(), dep_);
            if (instr.is_string_op()) {
                for (auto l : rw.read)
                    collect(l, dep_);
            } else if (instr.is_conditional_branch()) {
                for (auto f : isa::cond_flags(instr.cond))
                    collect(Location::flag(f), dep_);
            } else {
                for (auto r : isa::address_registers(instr))
                    collect(Location::reg(r), dep_);
            }
            contract::detail::append_observations(events, transient, trace_.observations);
        }

        if (rw.write.empty())
            return;
        scratch_.reset();
        collect(Location::pc(), scratch_);
        for (auto l : rw.read)
            collect(l, scratch_);
        LocSet value;
        for (std::size_t id = scratch_._Find_first(); id < scratch_.size();
             id = scratch_._Find_next(id))
            value.push_back(static_cast<std::uint16_t>(id));
        for (auto w : rw.write) {
            if (!marks_.empty())
                journal_.emplace_back(w.id(), map_[w.id()]);
            map_[w.id()] = value;
        }
    }

    void begin_speculation() { marks_.push_back(journal_.size()); }

    void end_speculation()
    {
        const auto mark = marks_.back();
        marks_.pop_back();
        while (journal_.size() > mark) {
            map_[journal_.back().first] = std::move(journal_.back().second);
            journal_.pop_back();
        }
    }

    TrackedRun finish()
    {
        TrackedRun out;
        out.trace = std::move(trace_);
        for (std::size_t id = dep_._Find_first(); id < dep_.size(); id = dep_._Find_next(id))
            if (id != Location::kPcId)
                out.deps.push_back(Location::from_id(static_cast<std::uint16_t>(id)));
        return out;
    }

  private:
    using Bits = std::bitset<Location::kCount>;

    void collect(Location l, Bits &into) const
    {
        const auto &deps = map_[l.id()];
        if (deps.empty()) {
            into.set(l.id());  // untouched: depends on itself
            return;
        }
        for (auto d : deps)
            into.set(d);
    }

    std::vector<LocSet> map_;  // empty entry = initial {self}
    std::vector<std::pair<std::uint16_t, LocSet>> journal_;
    std::vector<std::size_t> marks_;
    Bits dep_;
    Bits scratch_;
    contract::CTrace trace_;
};

}  // namespace

TrackedRun track(const contract::ContractModel &model, const InputData &input)
{
    DepHooks hooks;
    auto state = input.to_state();
    contract::detail::Engine<DepHooks> engine(model.spec(), model.program(), hooks);
    engine.run(state);
    return hooks.finish();
}

DepSet trace_dependencies(const contract::ContractSpec &spec, const isa::Program &program,
                          const InputData &input)
{
    return track(contract::ContractModel(spec, program), input).deps;
}

std::vector<std::string> names(const DepSet &deps)
{
    std::vector<std::string> out;
    out.reserve(deps.size());
    for (auto l : deps)
        out.push_back(l.name());
    return out;
}

}  // namespace relfuzz::deps
