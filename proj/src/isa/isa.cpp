#include "relfuzz/isa.hpp"

#include <array>

namespace relfuzz::isa {

namespace {

constexpr std::array<const char *, kNumConds> kCondNames = {
    "O", "NO", "B", "AE", "E", "NE", "BE", "A", "S", "NS", "L", "GE", "LE", "G"};

constexpr std::array<const char *, kNumCategories> kCategoryNames = {
    "base", "cond", "strn", "dmul", "flag", "lock", "atom", "dxfr",
    "setc", "nop",  "logi", "conv", "cmov", "bit",  "fence"};

const char *width_suffix(Width w)
{
    switch (w) {
    case Width::Byte: return "B";
    case Width::Word: return "W";
    case Width::Dword: return "D";
    case Width::Qword: return "Q";
    }
    return "?";
}

const char *base_mnemonic(Opcode op)
{
    switch (op) {
    case Opcode::Add: return "ADD";
    case Opcode::Adc: return "ADC";
    case Opcode::Sub: return "SUB";
    case Opcode::Sbb: return "SBB";
    case Opcode::Cmp: return "CMP";
    case Opcode::Inc: return "INC";
    case Opcode::Dec: return "DEC";
    case Opcode::Neg: return "NEG";
    case Opcode::Jcc: return "J";
    case Opcode::Jmp: return "JMP";
    case Opcode::Cmps: return "CMPS";
    case Opcode::Scas: return "SCAS";
    case Opcode::Div: return "DIV";
    case Opcode::Mul: return "MUL";
    case Opcode::Imul: return "IMUL";
    case Opcode::Clc: return "CLC";
    case Opcode::Stc: return "STC";
    case Opcode::Cmc: return "CMC";
    case Opcode::And: return "AND";
    case Opcode::Or: return "OR";
    case Opcode::Xor: return "XOR";
    case Opcode::Not: return "NOT";
    case Opcode::Test: return "TEST";
    case Opcode::Xadd: return "XADD";
    case Opcode::Cmpxchg: return "CMPXCHG";
    case Opcode::Mov: return "MOV";
    case Opcode::Movzx: return "MOVZX";
    case Opcode::Movsx: return "MOVSX";
    case Opcode::Xchg: return "XCHG";
    case Opcode::Bswap: return "BSWAP";
    case Opcode::Setcc: return "SET";
    case Opcode::Cmovcc: return "CMOV";
    case Opcode::Nop: return "NOP";
    case Opcode::Cbw: return "CBW";
    case Opcode::Cwde: return "CWDE";
    case Opcode::Cdqe: return "CDQE";
    case Opcode::Cwd: return "CWD";
    case Opcode::Cdq: return "CDQ";
    case Opcode::Cqo: return "CQO";
    case Opcode::Bt: return "BT";
    case Opcode::Bts: return "BTS";
    case Opcode::Btr: return "BTR";
    case Opcode::Btc: return "BTC";
    case Opcode::Bsf: return "BSF";
    case Opcode::Bsr: return "BSR";
    case Opcode::Fence: return "FENCE";
    }
    return "?";
}

}  // namespace

Category Instruction::category() const
{
    if (prefix == Prefix::Lock)
        return (opcode == Opcode::Xadd || opcode == Opcode::Cmpxchg) ? Category::Atom
                                                                     : Category::Lock;
    switch (opcode) {
    case Opcode::Add:
    case Opcode::Adc:
    case Opcode::Sub:
    case Opcode::Sbb:
    case Opcode::Cmp:
    case Opcode::Inc:
    case Opcode::Dec:
    case Opcode::Neg: return Category::Base;
    case Opcode::Jcc:
    case Opcode::Jmp: return Category::Cond;
    case Opcode::Cmps:
    case Opcode::Scas: return Category::Strn;
    case Opcode::Div:
    case Opcode::Mul:
    case Opcode::Imul: return Category::Dmul;
    case Opcode::Clc:
    case Opcode::Stc:
    case Opcode::Cmc: return Category::Flag;
    case Opcode::And:
    case Opcode::Or:
    case Opcode::Xor:
    case Opcode::Not:
    case Opcode::Test: return Category::Logi;
    case Opcode::Xadd:
    case Opcode::Cmpxchg: return Category::Atom;
    case Opcode::Mov:
    case Opcode::Movzx:
    case Opcode::Movsx:
    case Opcode::Xchg:
    case Opcode::Bswap: return Category::Dxfr;
    case Opcode::Setcc: return Category::Setc;
    case Opcode::Cmovcc: return Category::Cmov;
    case Opcode::Nop: return Category::Nop;
    case Opcode::Cbw:
    case Opcode::Cwde:
    case Opcode::Cdqe:
    case Opcode::Cwd:
    case Opcode::Cdq:
    case Opcode::Cqo: return Category::Conv;
    case Opcode::Bt:
    case Opcode::Bts:
    case Opcode::Btr:
    case Opcode::Btc:
    case Opcode::Bsf:
    case Opcode::Bsr: return Category::Bit;
    case Opcode::Fence: return Category::Fence;
    }
    return Category::Base;
}

std::string Instruction::mnemonic() const
{
    std::string out;
    switch (prefix) {
    case Prefix::None: break;
    case Prefix::Lock: out = "LOCK "; break;
    case Prefix::Repe: out = "REPE "; break;
    case Prefix::Repne: out = "REPNE "; break;
    }
    out += base_mnemonic(opcode);
    if (opcode == Opcode::Jcc || opcode == Opcode::Setcc || opcode == Opcode::Cmovcc)
        out += cond_name(cond);
    if (is_string_op())
        out += width_suffix(string_width);
    return out;
}

const MemOperand *Instruction::memory_operand() const
{
    for (const auto &op : operands)
        if (const auto *m = std::get_if<MemOperand>(&op))
            return m;
    return nullptr;
}

void Program::relink()
{
    for (auto &instr : instructions)
        for (auto &op : instr.operands)
            if (auto *l = std::get_if<LabelRef>(&op)) {
                auto it = labels.find(l->name);
                if (it != labels.end())
                    l->target = it->second;
            }
}

bool Flags::get(Flag f) const
{
    switch (f) {
    case Flag::ZF: return zf;
    case Flag::CF: return cf;
    case Flag::SF: return sf;
    case Flag::OF: return of;
    }
    return false;
}

void Flags::set(Flag f, bool v)
{
    switch (f) {
    case Flag::ZF: zf = v; break;
    case Flag::CF: cf = v; break;
    case Flag::SF: sf = v; break;
    case Flag::OF: of = v; break;
    }
}

std::string Location::name() const
{
    switch (kind()) {
    case Kind::Reg: return reg_name(static_cast<Reg>(index()));
    case Kind::Flag: return flag_name(static_cast<Flag>(index()));
    case Kind::Pc: return "PC";
    case Kind::Mem: return "mem[" + std::to_string(index()) + "]";
    }
    return "?";
}

ParseError::ParseError(ParseErrorKind kind, std::size_t line, const std::string &what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), kind_(kind), line_(line)
{
}

std::string reg_name(Reg r, Width w)
{
    static constexpr std::array<const char *, kNumRegs> names = {"RA", "RB",  "RC",
                                                                 "RD", "RSI", "RDI"};
    std::string n = names[static_cast<std::size_t>(r)];
    switch (w) {
    case Width::Qword: return n;
    case Width::Dword: return n + "D";
    case Width::Word: return n + "W";
    case Width::Byte: return n + "B";
    }
    return n;
}

std::string flag_name(Flag f)
{
    static constexpr std::array<const char *, kNumFlags> names = {"ZF", "CF", "SF", "OF"};
    return names[static_cast<std::size_t>(f)];
}

std::string cond_name(Cond c) { return kCondNames[static_cast<std::size_t>(c)]; }

std::string category_name(Category c) { return kCategoryNames[static_cast<std::size_t>(c)]; }

std::optional<Category> category_from_name(const std::string &name)
{
    for (std::size_t i = 0; i < kNumCategories; ++i)
        if (name == kCategoryNames[i])
            return static_cast<Category>(i);
    return std::nullopt;
}

}  // namespace relfuzz::isa
