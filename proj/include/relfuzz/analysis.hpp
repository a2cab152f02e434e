///
/// File: Relational analysis of contract and hardware traces.
///
///       Inputs are grouped by contract trace; a class whose members disagree on the hardware
///       trace is a contract violation. Before a violation is reported, the pair is measured
///       again with each input in the other's position of the input sequence, so that both see
///       the same predictor state. A pair whose difference disappears under the swap was
///       distinguished by context (or noise), not by the inputs, and is suppressed.
///
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "relfuzz/contract.hpp"
#include "relfuzz/dut.hpp"
#include "relfuzz/input.hpp"

namespace relfuzz::analysis {

struct TraceKey {
    std::uint64_t hash = 0;
    std::string text;
};

struct EquivalenceClass {
    TraceKey key;
    std::vector<std::size_t> members;  // ascending input indices
    bool ineffective() const { return members.size() < 2; }
};

/// Classes ordered by their smallest member. Equal hashes with different text are split.
std::vector<EquivalenceClass> build_classes(const std::vector<TraceKey> &keys);
std::vector<EquivalenceClass> build_classes(const std::vector<contract::CTrace> &traces);

struct Violation {
    std::size_t class_index = 0;
    std::size_t a = 0, b = 0;  // a < b
    TraceKey trace;
    dut::HTrace htrace_a, htrace_b;
};

/// One violation per class with differing hardware traces, naming the lexicographically
/// first differing pair.
std::vector<Violation> detect_violations(const std::vector<EquivalenceClass> &classes,
                                         const std::vector<dut::HTrace> &htraces);

/// All differing pairs of one class, in lexicographic order.
std::vector<std::pair<std::size_t, std::size_t>>
differing_pairs(const EquivalenceClass &cls, const std::vector<dut::HTrace> &htraces);

/// Swap re-measurement: true iff input b measured in a's position still differs from a's
/// trace, and vice versa. Adds the micro-ops the re-measurements issued to `uops`.
bool confirm_pair(const isa::Program &program, const std::vector<InputData> &inputs,
                  const dut::UarchConfig &cfg, const std::vector<dut::HTrace> &htraces,
                  std::size_t a, std::size_t b, std::uint64_t *uops = nullptr);

struct AnalysisResult {
    std::vector<EquivalenceClass> classes;
    std::vector<Violation> violations;     // confirmed
    std::size_t suppressed = 0;            // violating classes with no confirmed pair
    std::size_t effective_inputs = 0;      // members of classes with >= 2 members
    std::uint64_t confirm_uops = 0;        // issued by re-measurements
};

struct AnalysisOptions {
    /// Differing pairs tried per class before the class is suppressed.
    std::size_t max_confirm_attempts = 8;
};

AnalysisResult analyze(const isa::Program &program, const std::vector<InputData> &inputs,
                       const std::vector<contract::CTrace> &ctraces,
                       const std::vector<dut::HTrace> &htraces, const dut::UarchConfig &cfg,
                       const AnalysisOptions &options = {});

}  // namespace relfuzz::analysis
