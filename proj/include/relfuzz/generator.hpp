///
/// File: Seeded random test-case generation.
///
///       Programs are a forward DAG of basic blocks. Each block except the last ends with a
///       conditional branch to a later block (or to the exit); the bodies are filled with
///       instructions drawn uniformly from the templates of the configured categories plus the
///       arithmetic base. Every memory access and every DIV is preceded by its sandbox
///       instrumentation, so generated programs always pass validate_sandbox.
///
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "relfuzz/input.hpp"
#include "relfuzz/isa.hpp"

namespace relfuzz::gen {

class InfeasibleConfig : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct GenConfig {
    std::set<isa::Category> categories;
    std::size_t program_size = 32;  // instrumentation excluded
    std::size_t mem_accesses = 8;   // instrumentation excluded
    std::optional<std::size_t> basic_blocks;  // default: 2 with cond, 1 otherwise
    unsigned input_entropy_bits = 16;
    std::uint64_t seed = 0;

    std::size_t effective_basic_blocks() const;
    /// Throws InfeasibleConfig on violated invariants.
    void validate() const;
};

/// Deterministic in cfg (including cfg.seed).
isa::Program generate_program(const GenConfig &cfg);

/// `n` random inputs from the stream of cfg.seed.
std::vector<InputData> generate_inputs(std::size_t n, const GenConfig &cfg);

/// Number of distinct body templates available to `categories`; exposed for tests.
std::size_t template_count(const std::set<isa::Category> &categories);

}  // namespace relfuzz::gen
