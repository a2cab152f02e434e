///
/// File: Campaign configuration.
///
///       YAML with one nesting level. Key names follow the Revizor configuration format where it
///       has them (instruction_categories, contract_observation_clause, contract_execution_clause,
///       enable_speculation_filter, enable_observation_filter, inputs_per_class). DUT settings
///       live under `uarch:`. Unknown keys are errors, so a typo never silently falls back to a
///       default.
///
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>

#include "relfuzz/contract.hpp"
#include "relfuzz/dut.hpp"
#include "relfuzz/generator.hpp"

namespace relfuzz::config {

/// Bumped whenever a change would make old reports irreproducible.
inline constexpr const char *kSemanticsVersion = "relfuzz-semantics-1";

class ConfigError : public std::runtime_error {
  public:
    enum class Kind : std::uint8_t { UnknownKey, TypeMismatch, InvalidValue, Io };
    ConfigError(Kind kind, std::size_t line, const std::string &what);
    Kind kind() const { return kind_; }
    std::size_t line() const { return line_; }  // 1-based, 0 if not tied to a line

  private:
    Kind kind_;
    std::size_t line_;
};

struct CampaignConfig {
    std::set<isa::Category> categories;
    contract::ContractSpec contract;
    bool speculation_filter = true;
    bool observation_filter = true;
    std::size_t inputs_per_class = 2;  // 1 disables contract-driven input generation
    std::size_t program_size = 32;
    std::size_t mem_accesses = 8;
    std::optional<std::size_t> basic_blocks;
    unsigned entropy_bits = 16;
    dut::UarchConfig uarch;
    std::size_t num_programs = 100;
    std::size_t inputs_per_program = 50;
    std::uint64_t seed = 0;

    /// Generator settings for one round.
    gen::GenConfig gen_config(std::uint64_t round_seed) const;
    /// Throws ConfigError(InvalidValue).
    void validate() const;
    /// Canonical `key: value` text of every setting, in a fixed order.
    std::string canonical() const;
    /// Hash of canonical() and the semantics version, as 16 hex digits.
    std::string fingerprint() const;
};

/// Maps Revizor subset names (BASE-BINARY, BASE-STRINGOP, BASE-COND_BR, ...) and the short
/// names (cond, strn, ...) to categories.
std::optional<isa::Category> category_from_config_name(const std::string &name);

CampaignConfig parse_config_text(const std::string &text);
CampaignConfig parse_config_file(const std::string &path);

}  // namespace relfuzz::config
