#include "relfuzz/semantics.hpp"

#include <algorithm>
#include <bit>

namespace relfuzz::isa {

namespace {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

u64 sign_bit(Width w) { return 1ull << (bits(w) - 1); }

u64 sign_extend(u64 v, Width w)
{
    v &= width_mask(w);
    if (w != Width::Qword && (v & sign_bit(w)))
        v |= ~width_mask(w);
    return v;
}

void set_zs(Flags &f, u64 r, Width w)
{
    r &= width_mask(w);
    f.zf = r == 0;
    f.sf = (r & sign_bit(w)) != 0;
}

u64 add_flags(Flags &f, u64 a, u64 b, bool carry, Width w)
{
    const u64 m = width_mask(w);
    a &= m;
    b &= m;
    const u128 wide = static_cast<u128>(a) + b + (carry ? 1 : 0);
    const u64 r = static_cast<u64>(wide) & m;
    f.cf = w == Width::Qword ? (wide >> 64) != 0 : (static_cast<u64>(wide) >> bits(w)) != 0;
    const u64 s = sign_bit(w);
    f.of = ((a & s) == (b & s)) && ((r & s) != (a & s));
    set_zs(f, r, w);
    return r;
}

u64 sub_flags(Flags &f, u64 a, u64 b, bool borrow, Width w)
{
    const u64 m = width_mask(w);
    a &= m;
    b &= m;
    const u64 r = (a - b - (borrow ? 1 : 0)) & m;
    f.cf = static_cast<u128>(a) < static_cast<u128>(b) + (borrow ? 1 : 0);
    const u64 s = sign_bit(w);
    f.of = ((a & s) != (b & s)) && ((r & s) != (a & s));
    set_zs(f, r, w);
    return r;
}

void logic_flags(Flags &f, u64 r, Width w)
{
    f.cf = false;
    f.of = false;
    set_zs(f, r, w);
}

/// Operand access with event recording.
class Access {
  public:
    Access(ArchState &state, std::vector<ArchEvent> *events) : s_(state), events_(events) {}

    u64 read(const Operand &op, Width w)
    {
        if (const auto *r = std::get_if<RegOperand>(&op))
            return s_.reg(r->reg) & width_mask(w);
        if (const auto *i = std::get_if<Immediate>(&op))
            return static_cast<u64>(i->value) & width_mask(w);
        const auto off = offset_of(std::get<MemOperand>(op));
        if (events_)
            events_->push_back(MemRead{off, bytes(w)});
        return load_bytes(s_.memory, off, bytes(w));
    }

    void write(const Operand &op, Width w, u64 v)
    {
        if (const auto *r = std::get_if<RegOperand>(&op)) {
            write_reg(r->reg, w, v);
            return;
        }
        const auto off = offset_of(std::get<MemOperand>(op));
        if (events_)
            events_->push_back(MemWrite{off, bytes(w)});
        store_bytes(s_.memory, off, bytes(w), v);
    }

    void write_reg(Reg reg, Width w, u64 v)
    {
        auto &slot = s_.reg(reg);
        if (w == Width::Qword || w == Width::Dword)
            slot = v & width_mask(w);  // 32-bit writes zero-extend
        else
            slot = (slot & ~width_mask(w)) | (v & width_mask(w));
    }

    u64 read_mem(std::size_t off, Width w)
    {
        off %= kPageSize;
        if (events_)
            events_->push_back(MemRead{off, bytes(w)});
        return load_bytes(s_.memory, off, bytes(w));
    }

  private:
    /// The address is formed once per instruction, before any register is written.
    std::size_t offset_of(const MemOperand &m)
    {
        if (!offset_)
            offset_ = effective_offset(m, s_);
        return *offset_;
    }

    ArchState &s_;
    std::vector<ArchEvent> *events_;
    std::optional<std::size_t> offset_;
};

Width op_width(const Operand &op)
{
    if (const auto *r = std::get_if<RegOperand>(&op))
        return r->width;
    if (const auto *m = std::get_if<MemOperand>(&op))
        return m->width;
    return Width::Qword;
}

StepInfo string_step(ArchState &s, const Instruction &instr, Access &acc, const StepLimits &limits)
{
    StepInfo info;
    const Width w = instr.string_width;
    const bool repe = instr.prefix == Prefix::Repe;
    bool condition_stop = false;
    while (s.reg(Reg::RC) != 0 && info.string_iterations < limits.max_string_iterations) {
        u64 lhs;
        if (instr.opcode == Opcode::Cmps) {
            lhs = acc.read_mem(s.reg(Reg::RSI) & kPageMask, w);
        } else {
            lhs = s.reg(Reg::RA) & width_mask(w);
        }
        const u64 rhs = acc.read_mem(s.reg(Reg::RDI) & kPageMask, w);
        sub_flags(s.flags, lhs, rhs, false, w);
        if (instr.opcode == Opcode::Cmps)
            s.reg(Reg::RSI) += bytes(w);
        s.reg(Reg::RDI) += bytes(w);
        s.reg(Reg::RC) -= 1;
        ++info.string_iterations;
        if (s.flags.zf != repe) {
            condition_stop = true;
            break;
        }
    }
    const bool done = condition_stop || s.reg(Reg::RC) == 0;
    info.count_exhausted = !condition_stop && s.reg(Reg::RC) == 0;
    if (done)
        s.pc += 1;
    return info;
}

u64 bit_scan(u64 v, bool forward)
{
    return forward ? static_cast<u64>(std::countr_zero(v)) : static_cast<u64>(63 - std::countl_zero(v));
}

}  // namespace

bool eval_cond(Cond cond, const Flags &f)
{
    switch (cond) {
    case Cond::O: return f.of;
    case Cond::NO: return !f.of;
    case Cond::B: return f.cf;
    case Cond::AE: return !f.cf;
    case Cond::E: return f.zf;
    case Cond::NE: return !f.zf;
    case Cond::BE: return f.cf || f.zf;
    case Cond::A: return !f.cf && !f.zf;
    case Cond::S: return f.sf;
    case Cond::NS: return !f.sf;
    case Cond::L: return f.sf != f.of;
    case Cond::GE: return f.sf == f.of;
    case Cond::LE: return f.zf || f.sf != f.of;
    case Cond::G: return !f.zf && f.sf == f.of;
    }
    return false;
}

std::vector<Flag> cond_flags(Cond cond)
{
    switch (cond) {
    case Cond::O:
    case Cond::NO: return {Flag::OF};
    case Cond::B:
    case Cond::AE: return {Flag::CF};
    case Cond::E:
    case Cond::NE: return {Flag::ZF};
    case Cond::BE:
    case Cond::A: return {Flag::ZF, Flag::CF};
    case Cond::S:
    case Cond::NS: return {Flag::SF};
    case Cond::L:
    case Cond::GE: return {Flag::SF, Flag::OF};
    case Cond::LE:
    case Cond::G: return {Flag::ZF, Flag::SF, Flag::OF};
    }
    return {};
}

std::size_t effective_offset(const MemOperand &mem, const ArchState &state)
{
    u64 ea = static_cast<u64>(mem.disp);
    if (mem.base)
        ea += state.reg(*mem.base);
    if (mem.index)
        ea += state.reg(*mem.index);
    return static_cast<std::size_t>(ea & kPageMask);
}

std::uint64_t load_bytes(const Memory &memory, std::size_t offset, unsigned size)
{
    u64 v = 0;
    for (unsigned i = 0; i < size; ++i)
        v |= static_cast<u64>(memory[(offset + i) % kPageSize]) << (8 * i);
    return v;
}

void store_bytes(Memory &memory, std::size_t offset, unsigned size, std::uint64_t value)
{
    for (unsigned i = 0; i < size; ++i)
        memory[(offset + i) % kPageSize] = static_cast<std::uint8_t>(value >> (8 * i));
}

std::vector<Reg> address_registers(const Instruction &instr)
{
    std::vector<Reg> out;
    if (instr.opcode == Opcode::Cmps)
        return {Reg::RSI, Reg::RDI};
    if (instr.opcode == Opcode::Scas)
        return {Reg::RDI};
    if (const auto *m = instr.memory_operand()) {
        if (m->base)
            out.push_back(*m->base);
        if (m->index && m->index != m->base)
            out.push_back(*m->index);
    }
    return out;
}

unsigned uop_cost(const Instruction &instr)
{
    if (instr.memory_operand() == nullptr)
        return 1;
    switch (instr.opcode) {
    case Opcode::Mov:
    case Opcode::Movzx:
    case Opcode::Movsx: return 1;
    default: return 2;
    }
}

StepInfo execute(ArchState &s, const Instruction &instr, std::vector<ArchEvent> *events,
                 const StepLimits &limits)
{
    Access acc(s, events);
    const auto &ops = instr.operands;
    const Width w = ops.empty() ? Width::Qword : op_width(ops[0]);
    Flags &f = s.flags;
    std::size_t next_pc = s.pc + 1;

    switch (instr.opcode) {
    case Opcode::Add:
    case Opcode::Adc:
    case Opcode::Sub:
    case Opcode::Sbb:
    case Opcode::Cmp: {
        const u64 b = acc.read(ops[1], w);
        const u64 a = acc.read(ops[0], w);
        const bool carry = (instr.opcode == Opcode::Adc || instr.opcode == Opcode::Sbb) && f.cf;
        const u64 r = (instr.opcode == Opcode::Add || instr.opcode == Opcode::Adc)
                          ? add_flags(f, a, b, carry, w)
                          : sub_flags(f, a, b, carry, w);
        if (instr.opcode != Opcode::Cmp)
            acc.write(ops[0], w, r);
        break;
    }
    case Opcode::Inc:
    case Opcode::Dec: {
        const u64 a = acc.read(ops[0], w);
        const bool cf = f.cf;
        const u64 r = instr.opcode == Opcode::Inc ? add_flags(f, a, 1, false, w)
                                                  : sub_flags(f, a, 1, false, w);
        f.cf = cf;
        acc.write(ops[0], w, r);
        break;
    }
    case Opcode::Neg: {
        const u64 a = acc.read(ops[0], w);
        const u64 r = sub_flags(f, 0, a, false, w);
        acc.write(ops[0], w, r);
        break;
    }
    case Opcode::Not: acc.write(ops[0], w, ~acc.read(ops[0], w)); break;
    case Opcode::And:
    case Opcode::Or:
    case Opcode::Xor:
    case Opcode::Test: {
        const u64 b = acc.read(ops[1], w);
        const u64 a = acc.read(ops[0], w);
        u64 r;
        if (instr.opcode == Opcode::Or)
            r = a | b;
        else if (instr.opcode == Opcode::Xor)
            r = a ^ b;
        else
            r = a & b;
        logic_flags(f, r, w);
        if (instr.opcode != Opcode::Test)
            acc.write(ops[0], w, r);
        break;
    }
    case Opcode::Jcc:
    case Opcode::Jmp: {
        const bool taken = instr.opcode == Opcode::Jmp || eval_cond(instr.cond, f);
        if (taken)
            next_pc = std::get<LabelRef>(ops[0]).target;
        if (events)
            events->push_back(Branch{taken, next_pc});
        break;
    }
    case Opcode::Cmps:
    case Opcode::Scas: return string_step(s, instr, acc, limits);
    case Opcode::Div: {
        const u64 divisor = acc.read(ops[0], Width::Qword);
        if (divisor == 0)
            throw DivideFault("division by zero");
        const u128 dividend = (static_cast<u128>(s.reg(Reg::RD)) << 64) | s.reg(Reg::RA);
        const u128 q = dividend / divisor;
        if ((q >> 64) != 0)
            throw DivideFault("quotient overflow");
        s.reg(Reg::RA) = static_cast<u64>(q);
        s.reg(Reg::RD) = static_cast<u64>(dividend % divisor);
        break;
    }
    case Opcode::Mul: {
        const u64 src = acc.read(ops[0], Width::Qword);
        const u128 p = static_cast<u128>(s.reg(Reg::RA)) * src;
        s.reg(Reg::RA) = static_cast<u64>(p);
        s.reg(Reg::RD) = static_cast<u64>(p >> 64);
        f.cf = f.of = s.reg(Reg::RD) != 0;
        set_zs(f, s.reg(Reg::RA), Width::Qword);
        break;
    }
    case Opcode::Imul: {
        const u64 b = acc.read(ops[1], w);
        const u64 a = acc.read(ops[0], w);
        const __int128 p = static_cast<__int128>(static_cast<std::int64_t>(sign_extend(a, w))) *
                           static_cast<std::int64_t>(sign_extend(b, w));
        const u64 r = static_cast<u64>(p) & width_mask(w);
        const bool fits = static_cast<__int128>(static_cast<std::int64_t>(sign_extend(r, w))) == p;
        f.cf = f.of = !fits;
        set_zs(f, r, w);
        acc.write(ops[0], w, r);
        break;
    }
    case Opcode::Clc: f.cf = false; break;
    case Opcode::Stc: f.cf = true; break;
    case Opcode::Cmc: f.cf = !f.cf; break;
    case Opcode::Xadd: {
        const u64 a = acc.read(ops[0], w);
        const u64 b = acc.read(ops[1], w);
        const u64 r = add_flags(f, a, b, false, w);
        acc.write(ops[1], w, a);
        acc.write(ops[0], w, r);
        break;
    }
    case Opcode::Cmpxchg: {
        const u64 dst = acc.read(ops[0], w);
        const u64 src = acc.read(ops[1], w);
        const u64 acc_val = s.reg(Reg::RA) & width_mask(w);
        sub_flags(f, acc_val, dst, false, w);
        if (f.zf) {
            acc.write(ops[0], w, src);
        } else {
            acc.write_reg(Reg::RA, w, dst);
            // the destination is written back unchanged on a mismatch
            if (std::holds_alternative<MemOperand>(ops[0]))
                acc.write(ops[0], w, dst);
        }
        break;
    }
    case Opcode::Mov: acc.write(ops[0], w, acc.read(ops[1], w)); break;
    case Opcode::Movzx:
    case Opcode::Movsx: {
        const Width sw = op_width(ops[1]);
        u64 v = acc.read(ops[1], sw);
        if (instr.opcode == Opcode::Movsx)
            v = sign_extend(v, sw);
        acc.write(ops[0], w, v);
        break;
    }
    case Opcode::Xchg: {
        const u64 a = acc.read(ops[0], w);
        const u64 b = acc.read(ops[1], w);
        acc.write(ops[0], w, b);
        acc.write(ops[1], w, a);
        break;
    }
    case Opcode::Bswap: {
        const u64 v = acc.read(ops[0], w);
        const u64 r = w == Width::Qword ? __builtin_bswap64(v)
                                        : __builtin_bswap32(static_cast<std::uint32_t>(v));
        acc.write(ops[0], w, r);
        break;
    }
    case Opcode::Setcc: acc.write(ops[0], Width::Byte, eval_cond(instr.cond, f) ? 1 : 0); break;
    case Opcode::Cmovcc: {
        const u64 v = acc.read(ops[1], w);
        if (eval_cond(instr.cond, f))
            acc.write(ops[0], w, v);
        break;
    }
    case Opcode::Nop:
    case Opcode::Fence: break;
    case Opcode::Cbw: acc.write_reg(Reg::RA, Width::Word, sign_extend(s.reg(Reg::RA), Width::Byte)); break;
    case Opcode::Cwde:
        acc.write_reg(Reg::RA, Width::Dword, sign_extend(s.reg(Reg::RA), Width::Word));
        break;
    case Opcode::Cdqe: s.reg(Reg::RA) = sign_extend(s.reg(Reg::RA), Width::Dword); break;
    case Opcode::Cwd:
    case Opcode::Cdq:
    case Opcode::Cqo: {
        const Width cw = instr.opcode == Opcode::Cwd   ? Width::Word
                         : instr.opcode == Opcode::Cdq ? Width::Dword
                                                       : Width::Qword;
        const bool neg = (s.reg(Reg::RA) & sign_bit(cw)) != 0;
        acc.write_reg(Reg::RD, cw, neg ? ~0ull : 0);
        break;
    }
    case Opcode::Bt:
    case Opcode::Bts:
    case Opcode::Btr:
    case Opcode::Btc: {
        const u64 offset = acc.read(ops[1], w) % bits(w);
        const u64 v = acc.read(ops[0], w);
        const u64 bit = 1ull << offset;
        f.cf = (v & bit) != 0;
        if (instr.opcode == Opcode::Bts)
            acc.write(ops[0], w, v | bit);
        else if (instr.opcode == Opcode::Btr)
            acc.write(ops[0], w, v & ~bit);
        else if (instr.opcode == Opcode::Btc)
            acc.write(ops[0], w, v ^ bit);
        break;
    }
    case Opcode::Bsf:
    case Opcode::Bsr: {
        const u64 v = acc.read(ops[1], w);
        f.zf = v == 0;
        if (v != 0)
            acc.write(ops[0], w, bit_scan(v, instr.opcode == Opcode::Bsf));
        break;
    }
    }
    s.pc = next_pc;
    return {};
}

StepOutcome arch_step(const ArchState &state, const Instruction &instr)
{
    StepOutcome out{state, {}};
    execute(out.state, instr, &out.events);
    return out;
}

// =================================================================================================
// Read and write sets
// =================================================================================================

namespace {

class SetBuilder {
  public:
    void read(Location l) { rw_.read.push_back(l); }
    void write(Location l) { rw_.write.push_back(l); }
    void read_flags(std::initializer_list<Flag> fs)
    {
        for (auto f : fs)
            read(Location::flag(f));
    }
    void write_flags(std::initializer_list<Flag> fs)
    {
        for (auto f : fs)
            write(Location::flag(f));
    }
    void all_flags_written() { write_flags({Flag::ZF, Flag::CF, Flag::SF, Flag::OF}); }

    /// Register part of an operand read; memory addressing registers.
    void read_op(const Operand &op)
    {
        if (const auto *r = std::get_if<RegOperand>(&op))
            read(Location::reg(r->reg));
        else if (const auto *m = std::get_if<MemOperand>(&op))
            read_address(*m);
    }

    /// A register destination narrower than 32 bits merges with its old value.
    void write_op(const Operand &op, bool conditional = false)
    {
        if (const auto *r = std::get_if<RegOperand>(&op)) {
            write(Location::reg(r->reg));
            if (conditional || r->width == Width::Byte || r->width == Width::Word)
                read(Location::reg(r->reg));
        } else if (const auto *m = std::get_if<MemOperand>(&op)) {
            read_address(*m);
        }
    }

    void read_address(const MemOperand &m)
    {
        if (m.base)
            read(Location::reg(*m.base));
        if (m.index)
            read(Location::reg(*m.index));
    }

    ReadWriteSets finish()
    {
        for (auto *v : {&rw_.read, &rw_.write}) {
            std::sort(v->begin(), v->end());
            v->erase(std::unique(v->begin(), v->end()), v->end());
        }
        return std::move(rw_);
    }

  private:
    ReadWriteSets rw_;
};

}  // namespace

ReadWriteSets read_write_sets(const Instruction &instr, const std::vector<ArchEvent> &events)
{
    SetBuilder b;
    b.read(Location::pc());
    const auto &ops = instr.operands;
    constexpr auto ZF = Flag::ZF, CF = Flag::CF, SF = Flag::SF, OF = Flag::OF;

    switch (instr.opcode) {
    case Opcode::Add:
    case Opcode::Sub:
    case Opcode::And:
    case Opcode::Or:
    case Opcode::Xor:
        b.read_op(ops[0]);
        b.read_op(ops[1]);
        b.write_op(ops[0]);
        b.all_flags_written();
        break;
    case Opcode::Adc:
    case Opcode::Sbb:
        b.read_op(ops[0]);
        b.read_op(ops[1]);
        b.read_flags({CF});
        b.write_op(ops[0]);
        b.all_flags_written();
        break;
    case Opcode::Cmp:
    case Opcode::Test:
        b.read_op(ops[0]);
        b.read_op(ops[1]);
        b.all_flags_written();
        break;
    case Opcode::Inc:
    case Opcode::Dec:
        b.read_op(ops[0]);
        b.write_op(ops[0]);
        b.write_flags({ZF, SF, OF});
        break;
    case Opcode::Neg:
        b.read_op(ops[0]);
        b.write_op(ops[0]);
        b.all_flags_written();
        break;
    case Opcode::Not:
    case Opcode::Bswap:
        b.read_op(ops[0]);
        b.write_op(ops[0]);
        break;
    case Opcode::Jcc:
        for (auto f : cond_flags(instr.cond))
            b.read(Location::flag(f));
        b.write(Location::pc());
        break;
    case Opcode::Jmp: b.write(Location::pc()); break;
    case Opcode::Cmps:
    case Opcode::Scas:
        b.read_flags({ZF, CF, SF, OF});
        b.read(Location::reg(Reg::RC));
        b.read(Location::reg(Reg::RDI));
        b.write(Location::reg(Reg::RC));
        b.write(Location::reg(Reg::RDI));
        if (instr.opcode == Opcode::Cmps) {
            b.read(Location::reg(Reg::RSI));
            b.write(Location::reg(Reg::RSI));
        } else {
            b.read(Location::reg(Reg::RA));
        }
        b.all_flags_written();
        break;
    case Opcode::Div:
        b.read_op(ops[0]);
        b.read(Location::reg(Reg::RA));
        b.read(Location::reg(Reg::RD));
        b.write(Location::reg(Reg::RA));
        b.write(Location::reg(Reg::RD));
        break;
    case Opcode::Mul:
        b.read_op(ops[0]);
        b.read(Location::reg(Reg::RA));
        b.write(Location::reg(Reg::RA));
        b.write(Location::reg(Reg::RD));
        b.all_flags_written();
        break;
    case Opcode::Imul:
        b.read_op(ops[0]);
        b.read_op(ops[1]);
        b.write_op(ops[0]);
        b.all_flags_written();
        break;
    case Opcode::Clc:
    case Opcode::Stc: b.write_flags({CF}); break;
    case Opcode::Cmc:
        b.read_flags({CF});
        b.write_flags({CF});
        break;
    case Opcode::Xadd:
    case Opcode::Xchg:
        b.read_op(ops[0]);
        b.read_op(ops[1]);
        b.write_op(ops[0]);
        b.write_op(ops[1]);
        if (instr.opcode == Opcode::Xadd)
            b.all_flags_written();
        break;
    case Opcode::Cmpxchg:
        b.read_op(ops[0]);
        b.read_op(ops[1]);
        b.read(Location::reg(Reg::RA));
        b.write_op(ops[0], true);
        b.write(Location::reg(Reg::RA));
        b.all_flags_written();
        break;
    case Opcode::Mov:
    case Opcode::Movzx:
    case Opcode::Movsx:
        b.read_op(ops[1]);
        b.write_op(ops[0]);
        break;
    case Opcode::Setcc:
        for (auto f : cond_flags(instr.cond))
            b.read(Location::flag(f));
        b.write_op(ops[0]);
        break;
    case Opcode::Cmovcc:
        for (auto f : cond_flags(instr.cond))
            b.read(Location::flag(f));
        b.read_op(ops[1]);
        b.write_op(ops[0], true);
        break;
    case Opcode::Nop:
    case Opcode::Fence: break;
    case Opcode::Cbw:
    case Opcode::Cwde:
    case Opcode::Cdqe:
        b.read(Location::reg(Reg::RA));
        b.write(Location::reg(Reg::RA));
        break;
    case Opcode::Cwd:
        b.read(Location::reg(Reg::RA));
        b.read(Location::reg(Reg::RD));
        b.write(Location::reg(Reg::RD));
        break;
    case Opcode::Cdq:
    case Opcode::Cqo:
        b.read(Location::reg(Reg::RA));
        b.write(Location::reg(Reg::RD));
        break;
    case Opcode::Bt:
        b.read_op(ops[0]);
        b.read_op(ops[1]);
        b.write_flags({CF});
        break;
    case Opcode::Bts:
    case Opcode::Btr:
    case Opcode::Btc:
        b.read_op(ops[0]);
        b.read_op(ops[1]);
        b.write_op(ops[0]);
        b.write_flags({CF});
        break;
    case Opcode::Bsf:
    case Opcode::Bsr:
        b.read_op(ops[1]);
        b.write_op(ops[0], true);
        b.write_flags({ZF});
        break;
    }

    for (const auto &ev : events) {
        if (const auto *r = std::get_if<MemRead>(&ev)) {
            for (unsigned i = 0; i < r->size; ++i)
                b.read(Location::mem(r->offset + i));
        } else if (const auto *w = std::get_if<MemWrite>(&ev)) {
            for (unsigned i = 0; i < w->size; ++i)
                b.write(Location::mem(w->offset + i));
        }
    }
    return b.finish();
}

ReadWriteSets read_write_sets(const Instruction &instr, const ArchState &state)
{
    ArchState copy = state;
    std::vector<ArchEvent> events;
    try {
        execute(copy, instr, &events);
    } catch (const DivideFault &) {
        // a faulting step still names the locations it read before faulting
    }
    return read_write_sets(instr, events);
}

}  // namespace relfuzz::isa
