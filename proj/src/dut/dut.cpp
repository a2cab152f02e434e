#include "relfuzz/dut.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <stdexcept>

#include "relfuzz/sandbox.hpp"
#include "relfuzz/semantics.hpp"

namespace relfuzz::dut {

using namespace isa;

std::string clause_name(Clause c)
{
    switch (c) {
    case Clause::CondPredictor: return "cond_predictor";
    case Clause::StoreBypass: return "store_bypass";
    case Clause::LviNull: return "lvi_null";
    case Clause::Zdi: return "zdi";
    case Clause::Sco: return "sco";
    }
    return "?";
}

std::optional<Clause> clause_from_name(const std::string &name)
{
    for (auto c : kAllClauses)
        if (clause_name(c) == name)
            return c;
    return std::nullopt;
}

bool UarchConfig::enabled(Clause c) const
{
    switch (c) {
    case Clause::CondPredictor: return cond_predictor;
    case Clause::StoreBypass: return store_bypass;
    case Clause::LviNull: return lvi_null;
    case Clause::Zdi: return zdi;
    case Clause::Sco: return sco;
    }
    return false;
}

void UarchConfig::set(Clause c, bool on)
{
    switch (c) {
    case Clause::CondPredictor: cond_predictor = on; break;
    case Clause::StoreBypass: store_bypass = on; break;
    case Clause::LviNull: lvi_null = on; break;
    case Clause::Zdi: zdi = on; break;
    case Clause::Sco: sco = on; break;
    }
}

bool UarchConfig::any_clause() const
{
    return std::any_of(std::begin(kAllClauses), std::end(kAllClauses),
                       [&](Clause c) { return enabled(c); });
}

void UarchConfig::validate() const
{
    auto pow2 = [](std::size_t v) { return v != 0 && (v & (v - 1)) == 0; };
    if (!pow2(cache_sets) || !pow2(cache_ways) || !pow2(line_size))
        throw std::invalid_argument("cache geometry must be powers of two");
    if (cache_sets > 64)
        throw std::invalid_argument("at most 64 cache sets fit the residency bitmap");
    if (line_size > kPageSize)
        throw std::invalid_argument("cache line larger than the sandbox page");
    if (!(noise_rate >= 0.0 && noise_rate <= 1.0))
        throw std::invalid_argument("noise_rate must be within [0, 1]");
}

std::string HTrace::hex() const
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(bitmap));
    return buf;
}

// =================================================================================================
// Cache
// =================================================================================================

Cache::Cache(std::size_t sets, std::size_t ways, std::size_t line_size)
    : sets_(sets), ways_(ways), line_size_(line_size), lines_(sets)
{
}

void Cache::flush()
{
    for (auto &set : lines_)
        set.clear();
}

void Cache::access(std::size_t offset, std::size_t size)
{
    const std::size_t first = offset / line_size_;
    const std::size_t last = (offset + size - 1) / line_size_;
    const std::size_t lines_in_page = kPageSize / line_size_;
    for (std::size_t l = first; l <= last; ++l) {
        const std::size_t line = l % lines_in_page;
        auto &set = lines_[line % sets_];
        auto it = std::find(set.begin(), set.end(), line);
        if (it != set.end())
            set.erase(it);
        set.insert(set.begin(), line);
        if (set.size() > ways_)
            set.pop_back();
    }
}

std::uint64_t Cache::residency() const
{
    std::uint64_t bits = 0;
    for (std::size_t s = 0; s < sets_; ++s)
        if (!lines_[s].empty())
            bits |= 1ull << s;
    return bits;
}

// =================================================================================================
// Simulator
// =================================================================================================

struct Simulator::Run {
    Cache cache;
    PerfCounters counters;
    std::deque<StoreRecord> stores;
    std::uint64_t seq = 0;
    bool assist_pending = false;
};

namespace {

void touch(Cache &cache, const std::vector<ArchEvent> &events)
{
    for (const auto &ev : events) {
        if (const auto *r = std::get_if<MemRead>(&ev))
            cache.access(r->offset, r->size);
        else if (const auto *w = std::get_if<MemWrite>(&ev))
            cache.access(w->offset, w->size);
    }
}

std::uint64_t uops_of(const Instruction &instr, const StepInfo &info)
{
    if (instr.is_string_op())
        return std::max<std::uint64_t>(1, info.string_iterations);
    return uop_cost(instr);
}

bool overlaps(std::size_t a, std::size_t a_size, std::size_t b, std::size_t b_size)
{
    for (std::size_t i = 0; i < a_size; ++i)
        for (std::size_t j = 0; j < b_size; ++j)
            if ((a + i) % kPageSize == (b + j) % kPageSize)
                return true;
    return false;
}

}  // namespace

Simulator::Simulator(const UarchConfig &cfg, const Program &program)
    : cfg_(cfg), program_(program), counters_(program.size(), 1), noise_rng_(cfg.noise_seed)
{
    cfg_.validate();
    require_valid(program_);
}

bool Simulator::fenced_after(std::size_t index) const
{
    return index + 1 < program_.size() && program_.instructions[index + 1].is_fence();
}

void Simulator::run_ahead(Run &run, ArchState &state, std::size_t &budget)
{
    std::vector<ArchEvent> events;
    while (state.pc < program_.size() && budget > 0) {
        const auto &instr = program_.instructions[state.pc];
        if (instr.is_fence())
            return;
        events.clear();
        StepInfo info;
        try {
            info = execute(state, instr, &events, StepLimits{budget});
        } catch (const DivideFault &) {
            return;
        }
        touch(run.cache, events);
        const auto uops = std::min<std::uint64_t>(uops_of(instr, info), budget);
        run.counters.uops_issued += uops;
        budget -= uops;
    }
}

void Simulator::transaction(Run &run, ArchState state, bool execute_trigger)
{
    const auto issued_before = run.counters.uops_issued;
    std::size_t budget = cfg_.speculation_window;
    if (execute_trigger && budget > 0) {
        const auto &instr = program_.instructions[state.pc];
        std::vector<ArchEvent> events;
        try {
            const auto info = execute(state, instr, &events, StepLimits{budget});
            touch(run.cache, events);
            const auto uops = std::min<std::uint64_t>(uops_of(instr, info), budget);
            run.counters.uops_issued += uops;
            budget -= uops;
        } catch (const DivideFault &) {
            budget = 0;
        }
    }
    run_ahead(run, state, budget);
    if (run.counters.uops_issued > issued_before)
        ++run.counters.recovery_events;
}

Measurement Simulator::run(const InputData &input)
{
    Run run{Cache(cfg_.cache_sets, cfg_.cache_ways, cfg_.line_size), {}, {}, 0, cfg_.lvi_null};
    ArchState state = input.to_state();
    std::vector<ArchEvent> events;

    while (state.pc < program_.size()) {
        const std::size_t i = state.pc;
        const auto &instr = program_.instructions[i];
        const bool fenced = fenced_after(i);

        if (cfg_.cond_predictor && instr.is_conditional_branch() && !fenced) {
            const bool predicted = counters_[i] >= 2;
            if (predicted != eval_cond(instr.cond, state.flags)) {
                ArchState wrong = state;
                wrong.pc = predicted ? std::get<LabelRef>(instr.operands[0]).target : i + 1;
                transaction(run, wrong, false);
            }
        }

        if (cfg_.zdi && instr.opcode == Opcode::Div && state.reg(Reg::RD) != 0 && !fenced) {
            ArchState zeroed = state;
            zeroed.reg(Reg::RD) = 0;
            transaction(run, zeroed, true);
        }

        if (instr.accesses_memory() && (run.assist_pending || cfg_.store_bypass)) {
            // the accesses this instruction is about to make
            ArchState probe = state;
            std::vector<ArchEvent> planned;
            try {
                execute(probe, instr, &planned);
            } catch (const DivideFault &) {
            }
            const ArchEvent *first = nullptr;
            for (const auto &ev : planned)
                if (!std::holds_alternative<Branch>(ev)) {
                    first = &ev;
                    break;
                }

            if (run.assist_pending && first) {
                run.assist_pending = false;
                const auto *load = std::get_if<MemRead>(first);
                if (load && !instr.is_string_op() && !fenced) {
                    ArchState nulled = state;
                    store_bytes(nulled.memory, load->offset, load->size, 0);
                    transaction(run, nulled, true);
                }
            }

            if (cfg_.store_bypass && !instr.is_string_op() && !fenced) {
                ArchState stale = state;
                bool bypassed = false;
                // newest first, so the oldest bypassed store's old bytes win
                for (auto it = run.stores.rbegin(); it != run.stores.rend(); ++it) {
                    if (run.seq - it->seq > cfg_.store_bypass_delay)
                        continue;
                    for (const auto &ev : planned) {
                        const auto *load = std::get_if<MemRead>(&ev);
                        if (load && overlaps(load->offset, load->size, it->offset,
                                             it->old_bytes.size())) {
                            for (std::size_t b = 0; b < it->old_bytes.size(); ++b)
                                stale.memory[(it->offset + b) % kPageSize] = it->old_bytes[b];
                            bypassed = true;
                            break;
                        }
                    }
                }
                if (bypassed)
                    transaction(run, stale, true);
            }
        }

        // architectural step
        events.clear();
        const Memory before = state.memory;
        const auto info = execute(state, instr, &events);
        touch(run.cache, events);
        const auto uops = uops_of(instr, info);
        run.counters.uops_issued += uops;
        run.counters.uops_retired += uops;

        for (const auto &ev : events)
            if (const auto *w = std::get_if<MemWrite>(&ev)) {
                StoreRecord rec{run.seq, w->offset, {}};
                for (unsigned b = 0; b < w->size; ++b)
                    rec.old_bytes.push_back(before[(w->offset + b) % kPageSize]);
                run.stores.push_back(std::move(rec));
            }
        if (instr.is_fence())
            run.stores.clear();
        while (!run.stores.empty() && run.seq - run.stores.front().seq >= cfg_.store_bypass_delay)
            run.stores.pop_front();

        if (instr.is_conditional_branch()) {
            auto &c = counters_[i];
            const bool taken = state.pc != i + 1;
            c = taken ? std::min<std::uint8_t>(3, c + 1) : (c > 0 ? c - 1 : 0);
        }

        if (cfg_.sco && instr.is_string_op() && info.count_exhausted && !fenced) {
            ArchState overrun = state;
            overrun.pc = i;
            overrun.reg(Reg::RC) = cfg_.sco_overrun_limit;
            std::vector<ArchEvent> transient;
            const auto extra = execute(overrun, instr, &transient);
            touch(run.cache, transient);
            run.counters.uops_issued += extra.string_iterations;
            if (extra.string_iterations > 0)
                ++run.counters.recovery_events;
        }
        ++run.seq;
    }

    Measurement m;
    m.htrace.bitmap = run.cache.residency();
    if (cfg_.noise_rate > 0.0 &&
        std::uniform_real_distribution<double>(0.0, 1.0)(noise_rng_) < cfg_.noise_rate)
        m.htrace.bitmap ^= 1ull << uniform_below(noise_rng_, cfg_.cache_sets);
    m.counters = run.counters;
    m.final_state = state;
    return m;
}

std::vector<Measurement> measure(const Program &program, const std::vector<InputData> &inputs,
                                 const UarchConfig &cfg)
{
    Simulator sim(cfg, program);
    std::vector<Measurement> out;
    out.reserve(inputs.size());
    for (const auto &in : inputs)
        out.push_back(sim.run(in));
    return out;
}

}  // namespace relfuzz::dut
