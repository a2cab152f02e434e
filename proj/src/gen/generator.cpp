#include "relfuzz/generator.hpp"

#include <algorithm>

#include "relfuzz/rng.hpp"
#include "relfuzz/sandbox.hpp"

namespace relfuzz::gen {

using namespace isa;

namespace {

enum class Shape {
    Binary,     // r/m, r/m/imm
    Unary,      // r/m
    Mul,        // r/m64
    Div,        // r64 divisor
    RegRm,      // r, r/m with 16/32/64-bit operands (IMUL, CMOVcc, BSF, BSR)
    Movzx,
    Movsx,
    Xchg,
    Bswap,
    Setcc,
    BitTest,    // r/m, r/imm
    Exchange,   // XADD / CMPXCHG: r/m, r
    Nullary,
    String,
};

struct Template {
    Category category;
    Opcode opcode;
    Prefix prefix;
    Shape shape;
    Opcode string_op = Opcode::Cmps;

    bool can_use_memory() const
    {
        switch (shape) {
        case Shape::Div:
        case Shape::Bswap:
        case Shape::Nullary: return false;
        default: return true;
        }
    }
    bool can_avoid_memory() const { return prefix != Prefix::Lock && shape != Shape::String; }
};

std::vector<Template> all_templates()
{
    std::vector<Template> t;
    auto add = [&](Category c, Opcode op, Shape s, Prefix p = Prefix::None) {
        t.push_back({c, op, p, s});
    };
    for (auto op : {Opcode::Add, Opcode::Adc, Opcode::Sub, Opcode::Sbb, Opcode::Cmp})
        add(Category::Base, op, Shape::Binary);
    for (auto op : {Opcode::Inc, Opcode::Dec, Opcode::Neg})
        add(Category::Base, op, Shape::Unary);

    for (auto prefix : {Prefix::Repe, Prefix::Repne})
        for (auto op : {Opcode::Cmps, Opcode::Scas})
            add(Category::Strn, op, Shape::String, prefix);

    add(Category::Dmul, Opcode::Div, Shape::Div);
    add(Category::Dmul, Opcode::Mul, Shape::Mul);
    add(Category::Dmul, Opcode::Imul, Shape::RegRm);

    for (auto op : {Opcode::Clc, Opcode::Stc, Opcode::Cmc})
        add(Category::Flag, op, Shape::Nullary);

    for (auto op : {Opcode::Add, Opcode::Adc, Opcode::Sub, Opcode::Sbb, Opcode::And, Opcode::Or,
                    Opcode::Xor})
        add(Category::Lock, op, Shape::Binary, Prefix::Lock);
    for (auto op : {Opcode::Inc, Opcode::Dec, Opcode::Neg, Opcode::Not})
        add(Category::Lock, op, Shape::Unary, Prefix::Lock);

    for (auto op : {Opcode::Xadd, Opcode::Cmpxchg}) {
        add(Category::Atom, op, Shape::Exchange);
        add(Category::Atom, op, Shape::Exchange, Prefix::Lock);
    }

    add(Category::Dxfr, Opcode::Mov, Shape::Binary);
    add(Category::Dxfr, Opcode::Movzx, Shape::Movzx);
    add(Category::Dxfr, Opcode::Movsx, Shape::Movsx);
    add(Category::Dxfr, Opcode::Xchg, Shape::Xchg);
    add(Category::Dxfr, Opcode::Bswap, Shape::Bswap);

    add(Category::Setc, Opcode::Setcc, Shape::Setcc);
    add(Category::Nop, Opcode::Nop, Shape::Nullary);

    for (auto op : {Opcode::And, Opcode::Or, Opcode::Xor, Opcode::Test})
        add(Category::Logi, op, Shape::Binary);
    add(Category::Logi, Opcode::Not, Shape::Unary);

    for (auto op : {Opcode::Cbw, Opcode::Cwde, Opcode::Cdqe, Opcode::Cwd, Opcode::Cdq, Opcode::Cqo})
        add(Category::Conv, op, Shape::Nullary);

    add(Category::Cmov, Opcode::Cmovcc, Shape::RegRm);

    for (auto op : {Opcode::Bt, Opcode::Bts, Opcode::Btr, Opcode::Btc})
        add(Category::Bit, op, Shape::BitTest);
    for (auto op : {Opcode::Bsf, Opcode::Bsr})
        add(Category::Bit, op, Shape::RegRm);

    add(Category::Fence, Opcode::Fence, Shape::Nullary);
    return t;
}

std::vector<Template> templates_for(const std::set<Category> &categories)
{
    std::vector<Template> out;
    for (const auto &t : all_templates())
        if (t.category == Category::Base || categories.count(t.category))
            out.push_back(t);
    return out;
}

// =================================================================================================
// Operand construction
// =================================================================================================

class Builder {
  public:
    explicit Builder(Rng &rng) : rng_(rng) {}

    Reg reg() { return kAllRegs[uniform_below(rng_, kNumRegs)]; }

    Width width(std::initializer_list<Width> allowed)
    {
        return *(allowed.begin() + uniform_below(rng_, allowed.size()));
    }
    Width any_width() { return width({Width::Byte, Width::Word, Width::Dword, Width::Qword}); }
    Width wide_width() { return width({Width::Word, Width::Dword, Width::Qword}); }

    RegOperand reg_op(Width w) { return {reg(), w}; }
    MemOperand mem_op(Width w) { return {reg(), std::nullopt, 0, w}; }

    Immediate imm(Width w)
    {
        std::int64_t v;
        if (rng_() & 1)
            v = static_cast<std::int64_t>(uniform_below(rng_, 256));
        else
            v = static_cast<std::int32_t>(rng_());  // sign-extended imm32
        if (w != Width::Qword)
            v = static_cast<std::int64_t>(static_cast<std::uint64_t>(v) & width_mask(w));
        return {v};
    }

    Cond cond() { return static_cast<Cond>(uniform_below(rng_, kNumConds)); }
    bool coin() { return (rng_() & 1) != 0; }

    Instruction make(const Template &t, bool memory)
    {
        Instruction in;
        in.opcode = t.opcode;
        in.prefix = t.prefix;
        auto &ops = in.operands;
        switch (t.shape) {
        case Shape::Binary: {
            const Width w = any_width();
            if (!memory) {
                ops = {reg_op(w), coin() ? Operand{reg_op(w)} : Operand{imm(w)}};
            } else if (t.prefix == Prefix::Lock) {
                ops = {mem_op(w), coin() ? Operand{reg_op(w)} : Operand{imm(w)}};
            } else {
                switch (uniform_below(rng_, 3)) {
                case 0: ops = {reg_op(w), mem_op(w)}; break;
                case 1: ops = {mem_op(w), reg_op(w)}; break;
                default: ops = {mem_op(w), imm(w)}; break;
                }
            }
            break;
        }
        case Shape::Unary: {
            const Width w = any_width();
            ops = {memory ? Operand{mem_op(w)} : Operand{reg_op(w)}};
            break;
        }
        case Shape::Mul:
            ops = {memory ? Operand{mem_op(Width::Qword)} : Operand{reg_op(Width::Qword)}};
            break;
        case Shape::Div: {
            static constexpr Reg divisors[] = {Reg::RB, Reg::RC, Reg::RSI, Reg::RDI};
            ops = {RegOperand{divisors[uniform_below(rng_, 4)], Width::Qword}};
            break;
        }
        case Shape::RegRm: {
            const Width w = wide_width();
            if (t.opcode == Opcode::Cmovcc)
                in.cond = cond();
            ops = {reg_op(w), memory ? Operand{mem_op(w)} : Operand{reg_op(w)}};
            break;
        }
        case Shape::Movzx:
        case Shape::Movsx: {
            const Width dst = wide_width();
            Width src;
            if (dst == Width::Word)
                src = Width::Byte;
            else if (dst == Width::Dword || t.shape == Shape::Movzx)
                src = width({Width::Byte, Width::Word});
            else
                src = width({Width::Byte, Width::Word, Width::Dword});
            ops = {reg_op(dst), memory ? Operand{mem_op(src)} : Operand{reg_op(src)}};
            break;
        }
        case Shape::Xchg: {
            const Width w = any_width();
            ops = {reg_op(w), memory ? Operand{mem_op(w)} : Operand{reg_op(w)}};
            if (memory && coin())
                std::swap(ops[0], ops[1]);
            break;
        }
        case Shape::Bswap: ops = {reg_op(width({Width::Dword, Width::Qword}))}; break;
        case Shape::Setcc:
            in.cond = cond();
            ops = {memory ? Operand{mem_op(Width::Byte)} : Operand{reg_op(Width::Byte)}};
            break;
        case Shape::BitTest: {
            const Width w = wide_width();
            const Operand offset = coin() ? Operand{reg_op(w)}
                                          : Operand{Immediate{static_cast<std::int64_t>(
                                                uniform_below(rng_, bits(w)))}};
            ops = {memory ? Operand{mem_op(w)} : Operand{reg_op(w)}, offset};
            break;
        }
        case Shape::Exchange: {
            const Width w = any_width();
            ops = {memory ? Operand{mem_op(w)} : Operand{reg_op(w)}, reg_op(w)};
            break;
        }
        case Shape::Nullary: break;
        case Shape::String: in.string_width = any_width(); break;
        }
        return in;
    }

  private:
    Rng &rng_;
};

Instruction instrumentation(Opcode op, Reg r, std::int64_t value)
{
    Instruction in;
    in.opcode = op;
    in.operands = {RegOperand{r, Width::Qword}, Immediate{value}};
    in.is_instrumentation = true;
    return in;
}

std::int64_t aligned_mask(Width w)
{
    return static_cast<std::int64_t>(kSandboxMask) & ~static_cast<std::int64_t>(bytes(w) - 1);
}

/// Instrumentation that must directly precede `instr`.
std::vector<Instruction> guards(const Instruction &instr)
{
    std::vector<Instruction> out;
    if (instr.is_string_op()) {
        out.push_back(instrumentation(Opcode::And, Reg::RC, 0xF));
        out.push_back(instrumentation(Opcode::Add, Reg::RC, 1));
        if (instr.opcode == Opcode::Cmps)
            out.push_back(instrumentation(Opcode::And, Reg::RSI, aligned_mask(instr.string_width)));
        out.push_back(instrumentation(Opcode::And, Reg::RDI, aligned_mask(instr.string_width)));
    } else if (const auto *m = instr.memory_operand()) {
        out.push_back(instrumentation(Opcode::And, *m->base, aligned_mask(m->width)));
    }
    if (instr.opcode == Opcode::Div) {
        out.push_back(instrumentation(Opcode::And, Reg::RD, 0xF));
        out.push_back(
            instrumentation(Opcode::Or, std::get<RegOperand>(instr.operands[0]).reg, 0x11));
    }
    return out;
}

}  // namespace

std::size_t GenConfig::effective_basic_blocks() const
{
    if (basic_blocks)
        return *basic_blocks;
    return categories.count(Category::Cond) ? 2 : 1;
}

void GenConfig::validate() const
{
    const auto bb = effective_basic_blocks();
    if (bb == 0)
        throw InfeasibleConfig("basic_blocks must be at least 1");
    if (bb > 1 && !categories.count(Category::Cond))
        throw InfeasibleConfig("more than one basic block needs the cond category");
    if (input_entropy_bits < 1 || input_entropy_bits > 64)
        throw InfeasibleConfig("input entropy must be within [1, 64] bits");
    if (program_size < mem_accesses)
        throw InfeasibleConfig("program_size is smaller than mem_accesses");
    if (program_size < (bb - 1) + mem_accesses)
        throw InfeasibleConfig("program_size leaves no room for " + std::to_string(mem_accesses) +
                               " memory accesses and " + std::to_string(bb - 1) + " branches");
}

std::size_t template_count(const std::set<Category> &categories)
{
    return templates_for(categories).size();
}

Program generate_program(const GenConfig &cfg)
{
    cfg.validate();
    Rng rng(derive_seed(cfg.seed, 0));
    Builder build(rng);

    const auto templates = templates_for(cfg.categories);
    std::vector<const Template *> memory_templates, plain_templates;
    for (const auto &t : templates) {
        if (t.can_use_memory())
            memory_templates.push_back(&t);
        if (t.can_avoid_memory())
            plain_templates.push_back(&t);
    }
    if (cfg.mem_accesses > 0 && memory_templates.empty())
        throw InfeasibleConfig("no memory-capable instruction in the configured categories");

    const std::size_t blocks = cfg.effective_basic_blocks();
    const std::size_t body = cfg.program_size - (blocks - 1);

    // which body slots access memory
    std::vector<bool> is_memory(body, false);
    std::fill(is_memory.begin(), is_memory.begin() + static_cast<std::ptrdiff_t>(cfg.mem_accesses),
              true);
    std::shuffle(is_memory.begin(), is_memory.end(), rng);

    // block boundaries: blocks-1 random cut points over the body slots
    std::vector<std::size_t> cuts;
    for (std::size_t i = 0; i + 1 < blocks; ++i)
        cuts.push_back(uniform_below(rng, body + 1));
    std::sort(cuts.begin(), cuts.end());
    cuts.push_back(body);

    Program program;
    auto block_label = [&](std::size_t b) {
        return b == blocks ? std::string(".exit") : ".bb" + std::to_string(b);
    };
    std::size_t slot = 0;
    for (std::size_t b = 0; b < blocks; ++b) {
        if (b > 0)
            program.labels[block_label(b)] = program.size();
        for (; slot < cuts[b]; ++slot) {
            const auto &pool = is_memory[slot] ? memory_templates : plain_templates;
            const Template &t = *pool[uniform_below(rng, pool.size())];
            Instruction instr = build.make(t, is_memory[slot]);
            for (auto &g : guards(instr))
                program.instructions.push_back(std::move(g));
            program.instructions.push_back(std::move(instr));
        }
        if (b + 1 < blocks) {
            const std::size_t target = b + 2 + uniform_below(rng, blocks - b - 1);
            Instruction jcc;
            jcc.opcode = Opcode::Jcc;
            jcc.cond = build.cond();
            jcc.operands = {LabelRef{block_label(std::min(target, blocks)), 0}};
            program.instructions.push_back(std::move(jcc));
        }
    }
    program.labels[block_label(blocks)] = program.size();
    program.relink();
    return program;
}

std::vector<InputData> generate_inputs(std::size_t n, const GenConfig &cfg)
{
    Rng rng(derive_seed(cfg.seed, 1));
    std::vector<InputData> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(random_input(rng, cfg.input_entropy_bits));
    return out;
}

}  // namespace relfuzz::gen
