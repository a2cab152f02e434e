///
/// File: Hand-written leak reproducers, one per DUT clause shape.
///
///       A fixture is an assembly file whose leading comments carry annotations:
///
///         # @leak: v1
///         # @clause: cond_predictor
///         # @input: RA=10 RB=5 mem[0x100]=0xC00 mem[0x70]=7:4 ZF=1
///         # @violation: 2 3
///
///       `mem[offset]=value[:size]` stores little-endian, 8 bytes unless a size is given.
///       Fixtures are analyzed on exactly their inputs, without contract-driven boosting, and
///       against CT-SEQ.
///
#pragma once

#include <array>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "relfuzz/analysis.hpp"
#include "relfuzz/contract.hpp"
#include "relfuzz/dut.hpp"
#include "relfuzz/filters.hpp"
#include "relfuzz/input.hpp"
#include "relfuzz/isa.hpp"

namespace relfuzz::fixtures {

inline constexpr std::array<std::string_view, 6> kLeakIds = {"v1",  "v4",        "lvi_null",
                                                             "zdi", "sco_repne", "sco_scas"};

struct Reproducer {
    std::string id;
    dut::Clause clause = dut::Clause::CondPredictor;
    std::string text;  // the fixture file
    isa::Program program;
    std::vector<InputData> inputs;
    contract::ContractSpec contract;
    std::pair<std::size_t, std::size_t> violation{0, 0};

    /// Only this fixture's clause enabled.
    dut::UarchConfig uarch() const;
};

/// Throws std::invalid_argument on malformed annotations.
Reproducer parse_reproducer(const std::string &text);
/// `<dir>/<id>.asm`; throws std::invalid_argument for an unknown id.
Reproducer load_reproducer(const std::string &id, const std::string &dir);
/// From the fixture directory of the source tree, or $RELFUZZ_FIXTURE_DIR if set.
Reproducer reproducer(const std::string &id);
std::string default_fixture_dir();

struct Outcome {
    filters::Verdict speculation;
    bool observation = false;
    analysis::AnalysisResult analysis;
};

/// Filters and analysis on the fixture's own inputs under `uarch`.
Outcome run(const Reproducer &r, const dut::UarchConfig &uarch);

}  // namespace relfuzz::fixtures
