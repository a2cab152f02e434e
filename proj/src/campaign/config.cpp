#include "relfuzz/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "relfuzz/hash.hpp"

namespace relfuzz::config {

using isa::Category;

ConfigError::ConfigError(Kind kind, std::size_t line, const std::string &what)
    : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
      kind_(kind), line_(line)
{
}

std::optional<Category> category_from_config_name(const std::string &name)
{
    static const std::map<std::string, Category> revizor = {
        {"BASE-BINARY", Category::Base},     {"BASE-STRINGOP", Category::Strn},
        {"BASE-COND_BR", Category::Cond},    {"BASE-DATAXFER", Category::Dxfr},
        {"BASE-LOGICAL", Category::Logi},    {"BASE-FLAGOP", Category::Flag},
        {"BASE-SETCC", Category::Setc},      {"BASE-CMOV", Category::Cmov},
        {"BASE-CONVERT", Category::Conv},    {"BASE-BITBYTE", Category::Bit},
        {"BASE-NOP", Category::Nop},         {"BASE-MISC", Category::Fence},
        {"BASE-DIVIDE", Category::Dmul},     {"BASE-MUL", Category::Dmul},
        {"BASE-SEMAPHORE", Category::Atom},  {"BASE-LOCK", Category::Lock},
    };
    if (auto it = revizor.find(name); it != revizor.end())
        return it->second;
    return isa::category_from_name(name);
}

gen::GenConfig CampaignConfig::gen_config(std::uint64_t round_seed) const
{
    gen::GenConfig g;
    g.categories = categories;
    g.program_size = program_size;
    g.mem_accesses = mem_accesses;
    g.basic_blocks = basic_blocks;
    g.input_entropy_bits = entropy_bits;
    g.seed = round_seed;
    return g;
}

void CampaignConfig::validate() const
{
    auto invalid = [](const std::string &what) {
        throw ConfigError(ConfigError::Kind::InvalidValue, 0, what);
    };
    if (inputs_per_class == 0)
        invalid("inputs_per_class must be at least 1");
    if (inputs_per_program == 0)
        invalid("inputs_per_program must be at least 1");
    if (contract.speculation_window == 0)
        invalid("contract_speculation_window must be at least 1");
    try {
        gen_config(0).validate();
        uarch.validate();
    } catch (const gen::InfeasibleConfig &e) {
        invalid(e.what());
    } catch (const std::invalid_argument &e) {
        invalid(e.what());
    }
}

std::string CampaignConfig::canonical() const
{
    std::ostringstream o;
    o << "instruction_categories: [";
    bool first = true;
    for (auto c : categories) {
        o << (first ? "" : ", ") << isa::category_name(c);
        first = false;
    }
    o << "]\n";
    o << "contract_observation_clause: ct\n";
    o << "contract_execution_clause: " << contract::to_string(contract.execution) << "\n";
    o << "contract_speculation_window: " << contract.speculation_window << "\n";
    o << "contract_max_nesting: " << contract.max_nesting << "\n";
    o << "enable_speculation_filter: " << (speculation_filter ? "true" : "false") << "\n";
    o << "enable_observation_filter: " << (observation_filter ? "true" : "false") << "\n";
    o << "inputs_per_class: " << inputs_per_class << "\n";
    o << "program_size: " << program_size << "\n";
    o << "mem_accesses: " << mem_accesses << "\n";
    if (basic_blocks)
        o << "basic_blocks: " << *basic_blocks << "\n";
    o << "input_gen_entropy_bits: " << entropy_bits << "\n";
    o << "num_programs: " << num_programs << "\n";
    o << "inputs_per_program: " << inputs_per_program << "\n";
    o << "seed: " << seed << "\n";
    o << "uarch:\n";
    for (auto c : dut::kAllClauses)
        o << "  " << dut::clause_name(c) << ": " << (uarch.enabled(c) ? "true" : "false") << "\n";
    o << "  speculation_window: " << uarch.speculation_window << "\n";
    o << "  store_bypass_delay: " << uarch.store_bypass_delay << "\n";
    o << "  sco_overrun_limit: " << uarch.sco_overrun_limit << "\n";
    o << "  cache_sets: " << uarch.cache_sets << "\n";
    o << "  cache_ways: " << uarch.cache_ways << "\n";
    o << "  line_size: " << uarch.line_size << "\n";
    char rate[32];
    std::snprintf(rate, sizeof rate, "%.17g", uarch.noise_rate);
    o << "  noise_rate: " << rate << "\n";
    o << "  noise_seed: " << uarch.noise_seed << "\n";
    return o.str();
}

std::string CampaignConfig::fingerprint() const
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical(), fnv1a64(kSemanticsVersion))));
    return buf;
}

namespace {

std::size_t line_of(const YAML::Node &n) { return static_cast<std::size_t>(n.Mark().line) + 1; }

template <typename T>
T scalar(const YAML::Node &n, const std::string &key)
{
    if (!n.IsScalar())
        throw ConfigError(ConfigError::Kind::TypeMismatch, line_of(n), key + ": expected a scalar");
    try {
        return n.as<T>();
    } catch (const YAML::BadConversion &) {
        throw ConfigError(ConfigError::Kind::TypeMismatch, line_of(n),
                          key + ": cannot read '" + n.Scalar() + "'");
    }
}

std::size_t count(const YAML::Node &n, const std::string &key)
{
    const auto v = scalar<long long>(n, key);
    if (v < 0)
        throw ConfigError(ConfigError::Kind::InvalidValue, line_of(n), key + " must not be negative");
    return static_cast<std::size_t>(v);
}

/// A scalar, or a list holding exactly one scalar (as in `contract_execution_clause: [seq]`).
std::string single_name(const YAML::Node &n, const std::string &key)
{
    if (n.IsSequence()) {
        if (n.size() != 1)
            throw ConfigError(ConfigError::Kind::InvalidValue, line_of(n),
                              key + ": exactly one value expected");
        return scalar<std::string>(n[0], key);
    }
    return scalar<std::string>(n, key);
}

void parse_uarch(const YAML::Node &node, dut::UarchConfig &u)
{
    if (!node.IsMap())
        throw ConfigError(ConfigError::Kind::TypeMismatch, line_of(node), "uarch: expected a map");
    for (const auto &kv : node) {
        const auto key = kv.first.as<std::string>();
        const auto &v = kv.second;
        if (auto c = dut::clause_from_name(key))
            u.set(*c, scalar<bool>(v, key));
        else if (key == "speculation_window")
            u.speculation_window = count(v, key);
        else if (key == "store_bypass_delay")
            u.store_bypass_delay = count(v, key);
        else if (key == "sco_overrun_limit")
            u.sco_overrun_limit = count(v, key);
        else if (key == "cache_sets")
            u.cache_sets = count(v, key);
        else if (key == "cache_ways")
            u.cache_ways = count(v, key);
        else if (key == "line_size")
            u.line_size = count(v, key);
        else if (key == "noise_rate")
            u.noise_rate = scalar<double>(v, key);
        else if (key == "noise_seed")
            u.noise_seed = scalar<std::uint64_t>(v, key);
        else
            throw ConfigError(ConfigError::Kind::UnknownKey, line_of(kv.first),
                              "unknown key 'uarch." + key + "'");
    }
}

}  // namespace

CampaignConfig parse_config_text(const std::string &text)
{
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException &e) {
        throw ConfigError(ConfigError::Kind::TypeMismatch, static_cast<std::size_t>(e.mark.line) + 1,
                          e.msg);
    }
    CampaignConfig cfg;
    if (root.IsNull())
        return cfg;
    if (!root.IsMap())
        throw ConfigError(ConfigError::Kind::TypeMismatch, line_of(root),
                          "the configuration must be a map of keys");

    for (const auto &kv : root) {
        const auto key = kv.first.as<std::string>();
        const auto &v = kv.second;
        if (key == "instruction_categories") {
            if (!v.IsSequence())
                throw ConfigError(ConfigError::Kind::TypeMismatch, line_of(v),
                                  key + ": expected a list");
            cfg.categories.clear();
            for (const auto &item : v) {
                const auto name = scalar<std::string>(item, key);
                const auto c = category_from_config_name(name);
                if (!c)
                    throw ConfigError(ConfigError::Kind::InvalidValue, line_of(item),
                                      "unknown instruction category '" + name + "'");
                if (*c != Category::Base)
                    cfg.categories.insert(*c);
            }
        } else if (key == "contract_observation_clause") {
            if (single_name(v, key) != "ct")
                throw ConfigError(ConfigError::Kind::InvalidValue, line_of(v),
                                  "only the 'ct' observation clause is supported");
        } else if (key == "contract_execution_clause") {
            const auto name = single_name(v, key);
            if (name == "seq")
                cfg.contract.execution = contract::ExecutionClause::Seq;
            else if (name == "cond")
                cfg.contract.execution = contract::ExecutionClause::Cond;
            else
                throw ConfigError(ConfigError::Kind::InvalidValue, line_of(v),
                                  "execution clause must be 'seq' or 'cond'");
        } else if (key == "contract_speculation_window") {
            cfg.contract.speculation_window = count(v, key);
        } else if (key == "contract_max_nesting") {
            cfg.contract.max_nesting = count(v, key);
        } else if (key == "enable_speculation_filter") {
            cfg.speculation_filter = scalar<bool>(v, key);
        } else if (key == "enable_observation_filter") {
            cfg.observation_filter = scalar<bool>(v, key);
        } else if (key == "inputs_per_class") {
            cfg.inputs_per_class = count(v, key);
        } else if (key == "program_size") {
            cfg.program_size = count(v, key);
        } else if (key == "mem_accesses") {
            cfg.mem_accesses = count(v, key);
        } else if (key == "basic_blocks") {
            cfg.basic_blocks = count(v, key);
        } else if (key == "input_gen_entropy_bits") {
            cfg.entropy_bits = static_cast<unsigned>(count(v, key));
        } else if (key == "num_programs") {
            cfg.num_programs = count(v, key);
        } else if (key == "inputs_per_program") {
            cfg.inputs_per_program = count(v, key);
        } else if (key == "seed") {
            cfg.seed = scalar<std::uint64_t>(v, key);
        } else if (key == "uarch") {
            parse_uarch(v, cfg.uarch);
        } else {
            throw ConfigError(ConfigError::Kind::UnknownKey, line_of(kv.first),
                              "unknown key '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

CampaignConfig parse_config_file(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError(ConfigError::Kind::Io, 0, "cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

}  // namespace relfuzz::config
