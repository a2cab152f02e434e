#include "relfuzz/fixtures.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "relfuzz/assembly.hpp"
#include "relfuzz/sandbox.hpp"
#include "relfuzz/semantics.hpp"

#ifndef RELFUZZ_FIXTURE_DIR
#define RELFUZZ_FIXTURE_DIR "fixtures"
#endif

namespace relfuzz::fixtures {

namespace {

[[noreturn]] void malformed(const std::string &what)
{
    throw std::invalid_argument("fixture: " + what);
}

std::uint64_t number(const std::string &s)
{
    std::size_t used = 0;
    std::uint64_t v = 0;
    try {
        v = std::stoull(s, &used, 0);
    } catch (const std::exception &) {
        malformed("bad number '" + s + "'");
    }
    if (used != s.size())
        malformed("bad number '" + s + "'");
    return v;
}

InputData parse_input(const std::string &spec)
{
    InputData in;
    std::istringstream words(spec);
    std::string w;
    while (words >> w) {
        const auto eq = w.find('=');
        if (eq == std::string::npos)
            malformed("expected name=value, got '" + w + "'");
        const auto name = w.substr(0, eq);
        const auto value = w.substr(eq + 1);
        if (name.rfind("mem[", 0) == 0 && name.back() == ']') {
            const auto offset = number(name.substr(4, name.size() - 5));
            unsigned size = 8;
            auto v = value;
            if (const auto colon = value.find(':'); colon != std::string::npos) {
                size = static_cast<unsigned>(number(value.substr(colon + 1)));
                v = value.substr(0, colon);
            }
            if (size == 0 || size > 8 || offset + size > isa::kPageSize)
                malformed("memory store out of range in '" + w + "'");
            isa::store_bytes(in.memory, offset, size, number(v));
            continue;
        }
        bool found = false;
        for (auto r : isa::kAllRegs)
            if (isa::reg_name(r) == name) {
                in.regs[static_cast<std::size_t>(r)] = number(value);
                found = true;
            }
        for (auto f : {isa::Flag::ZF, isa::Flag::CF, isa::Flag::SF, isa::Flag::OF})
            if (isa::flag_name(f) == name) {
                in.flags.set(f, number(value) != 0);
                found = true;
            }
        if (!found)
            malformed("unknown input location '" + name + "'");
    }
    return in;
}

std::string trim(const std::string &s)
{
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos)
        return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

dut::UarchConfig Reproducer::uarch() const
{
    dut::UarchConfig cfg;
    for (auto c : dut::kAllClauses)
        cfg.set(c, c == clause);
    return cfg;
}

Reproducer parse_reproducer(const std::string &text)
{
    Reproducer r;
    r.text = text;
    bool has_clause = false, has_violation = false;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        const auto t = trim(line);
        if (t.rfind("# @", 0) != 0)
            continue;
        const auto colon = t.find(':');
        if (colon == std::string::npos)
            malformed("annotation without ':' in '" + t + "'");
        const auto key = t.substr(3, colon - 3);
        const auto value = trim(t.substr(colon + 1));
        if (key == "leak") {
            r.id = value;
        } else if (key == "clause") {
            const auto c = dut::clause_from_name(value);
            if (!c)
                malformed("unknown clause '" + value + "'");
            r.clause = *c;
            has_clause = true;
        } else if (key == "input") {
            r.inputs.push_back(parse_input(value));
        } else if (key == "violation") {
            std::istringstream pair(value);
            std::string a, b;
            if (!(pair >> a >> b))
                malformed("@violation needs two input indices");
            r.violation = {number(a), number(b)};
            has_violation = true;
        } else {
            malformed("unknown annotation '@" + key + "'");
        }
    }
    if (r.id.empty() || !has_clause || !has_violation || r.inputs.empty())
        malformed("@leak, @clause, @input and @violation are required");
    if (r.violation.first >= r.violation.second || r.violation.second >= r.inputs.size())
        malformed("@violation indices out of range");
    r.program = isa::parse_program(text);
    isa::require_valid(r.program);
    r.contract.execution = contract::ExecutionClause::Seq;
    return r;
}

std::string default_fixture_dir()
{
    if (const char *env = std::getenv("RELFUZZ_FIXTURE_DIR"); env && *env)
        return env;
    return RELFUZZ_FIXTURE_DIR;
}

Reproducer load_reproducer(const std::string &id, const std::string &dir)
{
    if (std::find(kLeakIds.begin(), kLeakIds.end(), id) == kLeakIds.end())
        throw std::invalid_argument("unknown leak id '" + id + "'");
    const auto path = dir + "/" + id + ".asm";
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    auto r = parse_reproducer(buf.str());
    if (r.id != id)
        malformed(path + " is annotated as '" + r.id + "'");
    return r;
}

Reproducer reproducer(const std::string &id)
{
    return load_reproducer(id, default_fixture_dir());
}

Outcome run(const Reproducer &r, const dut::UarchConfig &uarch)
{
    Outcome out;
    const auto ms = dut::measure(r.program, r.inputs, uarch);
    out.speculation = filters::speculation_filter(ms);
    out.observation = filters::observation_filter(r.program, r.inputs, uarch, ms);

    const contract::ContractModel model(r.contract, r.program);
    std::vector<contract::CTrace> ctraces;
    for (const auto &in : r.inputs)
        ctraces.push_back(model.run(in).trace);
    std::vector<dut::HTrace> htraces;
    for (const auto &m : ms)
        htraces.push_back(m.htrace);
    out.analysis = analysis::analyze(r.program, r.inputs, ctraces, htraces, uarch);
    return out;
}

}  // namespace relfuzz::fixtures
