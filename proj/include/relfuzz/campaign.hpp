///
/// File: Testing campaigns: generate, filter, boost, trace, measure, analyze.
///
///       Every round derives its own seed from the campaign seed and the round index, so a round
///       can be regenerated in isolation and rounds may run in any order. Time is accounted in
///       deterministic work units (see kWork*), which keeps reports byte-identical across runs;
///       wall-clock time is reported by the command-line tool only.
///
#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "relfuzz/analysis.hpp"
#include "relfuzz/config.hpp"
#include "relfuzz/dut.hpp"
#include "relfuzz/input.hpp"
#include "relfuzz/isa.hpp"

namespace relfuzz::campaign {

// Work-unit cost model: one unit per DUT micro-op issued, per contract-model instruction
// step, and kWorkTrackingStep per step of a dependency-tracking pass (the taint bookkeeping
// costs a few times a plain step).
inline constexpr std::uint64_t kWorkDutUop = 1;
inline constexpr std::uint64_t kWorkContractStep = 1;
inline constexpr std::uint64_t kWorkTrackingStep = 4;

struct FilterRecord {
    bool ran = false;
    bool keep = true;
    dut::PerfCounters evidence;
};

struct ViolationRecord {
    std::string id;  // "<round>-<k>"
    std::size_t a = 0, b = 0;
    std::string ctrace;
    std::string htrace_a, htrace_b;
    InputData input_a, input_b;
};

struct RoundRecord {
    std::size_t round = 0;
    std::uint64_t seed = 0;
    std::string program;
    FilterRecord speculation, observation;
    bool analyzed = false;
    std::size_t inputs = 0;  // after boosting
    std::size_t classes = 0;
    std::size_t effective_inputs = 0;
    std::size_t degenerate_boosts = 0;
    std::size_t suppressed = 0;
    std::vector<ViolationRecord> violations;
    std::uint64_t work_units = 0;
    std::string error;  // non-empty if the round failed
};

struct Summary {
    std::size_t cases = 0;
    std::size_t discarded = 0;
    std::size_t analyzed = 0;
    std::size_t failed = 0;
    std::size_t violations = 0;
    std::size_t violating_cases = 0;
    std::uint64_t work_units = 0;
    std::optional<std::uint64_t> detection_time;  // work units up to the first violation
    double testing_speed = 0;                     // cases per million work units
    double detection_rate = 0;                    // violations per case
    double speculation_pass = 0;                  // fraction of cases kept
    double observation_pass = 0;                  // fraction of the cases it saw that it kept
    double effectiveness = 0;                     // effective inputs / analyzed inputs
};

Summary summarize(const std::vector<RoundRecord> &rounds);

struct CampaignReport {
    config::CampaignConfig config;
    std::string fingerprint;
    std::vector<RoundRecord> rounds;
    bool interrupted = false;

    Summary summary() const { return summarize(rounds); }
    const ViolationRecord *find_violation(const std::string &id, std::size_t *round = nullptr) const;
};

/// A regenerated test case.
struct TestCase {
    isa::Program program;
    std::vector<InputData> inputs;   // as generated
    std::vector<InputData> boosted;  // inputs followed by their siblings, input by input
    std::size_t degenerate_boosts = 0;
    std::uint64_t tracking_steps = 0;
};

std::uint64_t round_seed(const config::CampaignConfig &cfg, std::size_t round);
/// Program and raw inputs only; `boosted` stays empty.
TestCase generate_case(const config::CampaignConfig &cfg, std::size_t round);
/// Fills `boosted` (a copy of `inputs` when inputs_per_class is 1).
void boost_case(const config::CampaignConfig &cfg, std::size_t round, TestCase &tc);

/// Contract traces, hardware traces and analysis of `program` on exactly `inputs`. Adds the
/// work units spent to `work`.
analysis::AnalysisResult analyze_case(const config::CampaignConfig &cfg,
                                      const isa::Program &program,
                                      const std::vector<InputData> &inputs,
                                      std::uint64_t *work = nullptr);

RoundRecord run_round(const config::CampaignConfig &cfg, std::size_t round);

struct RunOptions {
    std::size_t jobs = 1;
    const std::atomic<bool> *stop = nullptr;  // checked between rounds
    std::function<void(const RoundRecord &)> on_round;
};

/// Throws config::ConfigError for invalid configurations; failing rounds are recorded.
CampaignReport run_campaign(const config::CampaignConfig &cfg, const RunOptions &options = {});

// reports ------------------------------------------------------------------------------------

/// Header line (configuration and fingerprint), one line per round, a trailer line.
std::string to_jsonl(const CampaignReport &report);
std::string summary_json(const CampaignReport &report);
/// Throws std::runtime_error on malformed input.
CampaignReport parse_jsonl(const std::string &text);
void write_report(const CampaignReport &report, const std::string &path);
CampaignReport read_report(const std::string &path);

// reproduction -------------------------------------------------------------------------------

class SeedMismatch : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct Reproduction {
    bool confirmed = false;
    RoundRecord rerun;
    std::string detail;
};

/// Regenerates the violation's round from its seed and runs the pipeline again, optionally
/// with one DUT clause switched off. Throws SeedMismatch if the stored fingerprint or round
/// seed does not match this build, std::invalid_argument for an unknown violation id.
Reproduction reproduce(const CampaignReport &report, const std::string &violation_id,
                       std::optional<dut::Clause> disable = std::nullopt);

}  // namespace relfuzz::campaign
