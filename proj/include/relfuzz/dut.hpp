///
/// File: Device under test: a deterministic speculative core with an L1D model.
///
///       Architectural execution uses the shared semantics. Each enabled leak clause can open
///       one transient transaction at a trigger instruction; the transaction executes on a copy
///       of the state, touches the cache, counts its micro-ops as issued but not retired, and is
///       then squashed. Transactions never nest, stop at FENCE, and are not opened at all when
///       the trigger is immediately followed by a FENCE.
///
///         cond_predictor  2-bit counters per branch (initially weakly not-taken), trained on
///                         architectural outcomes; a mispredicted Jcc runs the predicted path.
///         store_bypass    a load overlapping a store issued at most D instructions earlier
///                         reads the bytes from before that store, then runs ahead.
///         lvi_null        the page is assist-pending at the start of every input; the first
///                         memory access clears it, and if that access is a load it first
///                         transiently returns 0, then runs ahead.
///         zdi             DIV with RD != 0 transiently divides with RD = 0, then runs ahead.
///         sco             a REPE/REPNE CMPS/SCAS that ended because the count reached zero
///                         runs up to S more iterations, stopping at its own condition.
///
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "relfuzz/input.hpp"
#include "relfuzz/isa.hpp"
#include "relfuzz/rng.hpp"

namespace relfuzz::dut {

enum class Clause : std::uint8_t { CondPredictor, StoreBypass, LviNull, Zdi, Sco };
inline constexpr std::size_t kNumClauses = 5;
inline constexpr Clause kAllClauses[] = {Clause::CondPredictor, Clause::StoreBypass,
                                         Clause::LviNull, Clause::Zdi, Clause::Sco};

std::string clause_name(Clause c);  // config key, e.g. "cond_predictor"
std::optional<Clause> clause_from_name(const std::string &name);

struct UarchConfig {
    bool cond_predictor = true;
    bool store_bypass = false;
    bool lvi_null = false;
    bool zdi = false;
    bool sco = false;
    std::size_t speculation_window = 250;  // micro-ops
    std::size_t store_bypass_delay = 8;    // instructions
    std::size_t sco_overrun_limit = 8;     // iterations
    std::size_t cache_sets = 64;
    std::size_t cache_ways = 8;
    std::size_t line_size = 64;
    double noise_rate = 0.0;  // probability of one flipped bitmap bit per measurement
    std::uint64_t noise_seed = 0;

    bool enabled(Clause c) const;
    void set(Clause c, bool on);
    bool any_clause() const;
    /// Throws std::invalid_argument.
    void validate() const;
};

/// Set-residency bitmap after the run: bit s is set iff a sandbox line is cached in set s.
struct HTrace {
    std::uint64_t bitmap = 0;
    std::string hex() const;  // 16 hex digits
    friend bool operator==(const HTrace &, const HTrace &) = default;
};

struct PerfCounters {
    std::uint64_t uops_issued = 0;
    std::uint64_t uops_retired = 0;
    std::uint64_t recovery_events = 0;
    friend bool operator==(const PerfCounters &, const PerfCounters &) = default;
};

struct Measurement {
    HTrace htrace;
    PerfCounters counters;
    isa::ArchState final_state;
};

/// Set-associative LRU cache over the sandbox page.
class Cache {
  public:
    Cache(std::size_t sets, std::size_t ways, std::size_t line_size);
    void flush();
    /// Touches every line overlapping [offset, offset + size), wrapping inside the page.
    void access(std::size_t offset, std::size_t size);
    std::uint64_t residency() const;
    std::size_t set_of(std::size_t offset) const { return (offset / line_size_) % sets_; }

  private:
    std::size_t sets_, ways_, line_size_;
    std::vector<std::vector<std::size_t>> lines_;  // per set, most recent first
};

/// One simulator instance per test case: predictor state persists across run() calls.
class Simulator {
  public:
    /// Throws isa::ProgramInvalid and std::invalid_argument.
    Simulator(const UarchConfig &cfg, const isa::Program &program);

    Measurement run(const InputData &input);

    const UarchConfig &config() const { return cfg_; }
    const std::vector<std::uint8_t> &predictor() const { return counters_; }

  private:
    struct StoreRecord {
        std::uint64_t seq;
        std::size_t offset;
        std::vector<std::uint8_t> old_bytes;
    };
    struct Run;

    bool fenced_after(std::size_t index) const;
    void transaction(Run &run, isa::ArchState state, bool execute_trigger);
    void run_ahead(Run &run, isa::ArchState &state, std::size_t &budget);

    UarchConfig cfg_;
    const isa::Program &program_;
    std::vector<std::uint8_t> counters_;
    Rng noise_rng_;
};

/// Fresh simulator, all inputs in order.
std::vector<Measurement> measure(const isa::Program &program, const std::vector<InputData> &inputs,
                                 const UarchConfig &cfg);

}  // namespace relfuzz::dut
