#include "relfuzz/sandbox.hpp"

#include <algorithm>

#include "relfuzz/semantics.hpp"

namespace relfuzz::isa {

namespace {

/// What is known about the last definition of a register on every path.
struct RegFact {
    std::optional<std::int64_t> and_mask;  // instrumentation AND with a page-sized mask
    std::optional<std::int64_t> or_value;  // instrumentation OR with an odd immediate

    friend bool operator==(const RegFact &, const RegFact &) = default;
};

using FactState = std::array<RegFact, kNumRegs>;

FactState join(const FactState &a, const FactState &b)
{
    FactState out;
    for (std::size_t r = 0; r < kNumRegs; ++r) {
        if (a[r].and_mask && b[r].and_mask)
            out[r].and_mask = std::max(*a[r].and_mask, *b[r].and_mask);
        if (a[r].or_value && b[r].or_value)
            out[r].or_value = std::min(*a[r].or_value, *b[r].or_value);
    }
    return out;
}

const RegFact &fact(const FactState &s, Reg r) { return s[static_cast<std::size_t>(r)]; }

std::optional<std::int64_t> instrumentation_imm(const Instruction &instr, Opcode op, Reg &dst)
{
    if (!instr.is_instrumentation || instr.opcode != op || instr.prefix != Prefix::None ||
        instr.operands.size() != 2)
        return std::nullopt;
    const auto *r = std::get_if<RegOperand>(&instr.operands[0]);
    const auto *imm = std::get_if<Immediate>(&instr.operands[1]);
    if (!r || !imm || (r->width != Width::Qword && r->width != Width::Dword))
        return std::nullopt;
    dst = r->reg;
    return imm->value;
}

void transfer(FactState &s, const Instruction &instr)
{
    const auto rw = read_write_sets(instr, std::vector<ArchEvent>{});
    for (auto loc : rw.write)
        if (loc.kind() == Location::Kind::Reg)
            s[loc.index()] = RegFact{};

    Reg dst{};
    if (auto m = instrumentation_imm(instr, Opcode::And, dst); m && *m >= 0 && *m <= kSandboxMask)
        s[static_cast<std::size_t>(dst)].and_mask = *m;
    if (auto k = instrumentation_imm(instr, Opcode::Or, dst); k && *k > 0 && (*k & 1) != 0)
        s[static_cast<std::size_t>(dst)].or_value = *k;
}

void check(const FactState &s, const Instruction &instr, std::size_t index,
           std::vector<Diagnostic> &out)
{
    const auto at = " at index " + std::to_string(index);
    if (instr.is_string_op()) {
        for (auto r : address_registers(instr))
            if (!fact(s, r).and_mask)
                out.push_back({index, "unmasked pointer " + reg_name(r) + at});
    } else if (const auto *m = instr.memory_operand()) {
        if (m->base && !fact(s, *m->base).and_mask)
            out.push_back({index, "unmasked base " + reg_name(*m->base) + at});
        if (m->index && !fact(s, *m->index).and_mask)
            out.push_back({index, "unmasked index " + reg_name(*m->index) + at});
    }

    if (instr.opcode != Opcode::Div)
        return;
    const auto *divisor = std::get_if<RegOperand>(&instr.operands[0]);
    if (!divisor) {
        out.push_back({index, "memory divisor" + at});
        return;
    }
    const auto k = fact(s, divisor->reg).or_value;
    if (!k) {
        out.push_back({index, "unguarded divisor " + reg_name(divisor->reg) + at});
        return;
    }
    const auto m = fact(s, Reg::RD).and_mask;
    if (!m || *m >= *k)
        out.push_back({index, "unbounded RD before division" + at});
}

}  // namespace

std::vector<Diagnostic> validate_sandbox(const Program &program)
{
    std::vector<Diagnostic> out;
    const std::size_t n = program.size();
    std::vector<std::optional<FactState>> in(n + 1);
    in[0] = FactState{};

    auto merge_into = [&](std::size_t target, const FactState &s) {
        if (target > n)
            return;
        in[target] = in[target] ? join(*in[target], s) : s;
    };

    for (std::size_t i = 0; i < n; ++i) {
        // branches only go forward, so in[i] is complete once we get here
        FactState s = in[i].value_or(FactState{});
        const auto &instr = program.instructions[i];
        check(s, instr, i, out);
        transfer(s, instr);
        if (instr.is_branch())
            merge_into(std::get<LabelRef>(instr.operands[0]).target, s);
        if (instr.opcode != Opcode::Jmp)
            merge_into(i + 1, s);
    }
    return out;
}

ProgramInvalid::ProgramInvalid(const std::vector<Diagnostic> &diagnostics)
    : std::runtime_error(diagnostics.empty() ? std::string("invalid program")
                                             : diagnostics.front().message),
      diagnostics_(diagnostics)
{
}

void require_valid(const Program &program)
{
    auto diagnostics = validate_sandbox(program);
    if (!diagnostics.empty())
        throw ProgramInvalid(diagnostics);
}

}  // namespace relfuzz::isa
