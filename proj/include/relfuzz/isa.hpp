///
/// File: Reduced x86-like instruction set shared by the contract model and the DUT simulator.
///
///       Six 64-bit registers with 32/16/8-bit views, four flags and one 4 KiB sandbox page.
///       Every memory address is an offset into that page; byte accesses wrap modulo the
///       page size so a multi-byte access at the last offsets stays inside the sandbox.
///
#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace relfuzz::isa {

inline constexpr std::size_t kPageSize = 4096;
inline constexpr std::uint64_t kPageMask = kPageSize - 1;
inline constexpr std::size_t kNumRegs = 6;
inline constexpr std::size_t kNumFlags = 4;

enum class Reg : std::uint8_t { RA, RB, RC, RD, RSI, RDI };
enum class Flag : std::uint8_t { ZF, CF, SF, OF };

inline constexpr std::array<Reg, kNumRegs> kAllRegs = {Reg::RA,  Reg::RB,  Reg::RC,
                                                       Reg::RD,  Reg::RSI, Reg::RDI};
inline constexpr std::array<Flag, kNumFlags> kAllFlags = {Flag::ZF, Flag::CF, Flag::SF, Flag::OF};

/// Operand width in bytes.
enum class Width : std::uint8_t { Byte = 1, Word = 2, Dword = 4, Qword = 8 };

constexpr unsigned bytes(Width w) { return static_cast<unsigned>(w); }
constexpr unsigned bits(Width w) { return 8u * bytes(w); }
constexpr std::uint64_t width_mask(Width w)
{
    return w == Width::Qword ? ~0ull : (1ull << bits(w)) - 1;
}

struct RegOperand {
    Reg reg = Reg::RA;
    Width width = Width::Qword;
    friend bool operator==(const RegOperand &, const RegOperand &) = default;
};

/// base + index + displacement, all optional except that at least one register is present.
struct MemOperand {
    std::optional<Reg> base;
    std::optional<Reg> index;
    std::int64_t disp = 0;
    Width width = Width::Qword;
    friend bool operator==(const MemOperand &, const MemOperand &) = default;
};

struct Immediate {
    std::int64_t value = 0;
    friend bool operator==(const Immediate &, const Immediate &) = default;
};

struct LabelRef {
    std::string name;
    std::size_t target = 0;  // resolved instruction index
    friend bool operator==(const LabelRef &, const LabelRef &) = default;
};

using Operand = std::variant<RegOperand, MemOperand, Immediate, LabelRef>;

enum class Cond : std::uint8_t { O, NO, B, AE, E, NE, BE, A, S, NS, L, GE, LE, G };
inline constexpr std::size_t kNumConds = 14;

enum class Opcode : std::uint8_t {
    // base arithmetic, present in every subset
    Add, Adc, Sub, Sbb, Cmp, Inc, Dec, Neg,
    // cond
    Jcc, Jmp,
    // strn (always REPE/REPNE prefixed)
    Cmps, Scas,
    // dmul
    Div, Mul, Imul,
    // flag
    Clc, Stc, Cmc,
    // logi (lock when LOCK prefixed)
    And, Or, Xor, Not, Test,
    // atom
    Xadd, Cmpxchg,
    // dxfr
    Mov, Movzx, Movsx, Xchg, Bswap,
    // setc / cmov
    Setcc, Cmovcc,
    // nop
    Nop,
    // conv
    Cbw, Cwde, Cdqe, Cwd, Cdq, Cqo,
    // bit
    Bt, Bts, Btr, Btc, Bsf, Bsr,
    // serialization barrier
    Fence,
};

enum class Prefix : std::uint8_t { None, Lock, Repe, Repne };

/// Instruction subsets; Base is the arithmetic core shared by every subset.
enum class Category : std::uint8_t {
    Base, Cond, Strn, Dmul, Flag, Lock, Atom, Dxfr, Setc, Nop, Logi, Conv, Cmov, Bit, Fence,
};
inline constexpr std::size_t kNumCategories = 15;

struct Instruction {
    Opcode opcode = Opcode::Nop;
    Prefix prefix = Prefix::None;
    Cond cond = Cond::O;               // Jcc / Setcc / Cmovcc only
    Width string_width = Width::Byte;  // Cmps / Scas only
    std::vector<Operand> operands;
    bool is_instrumentation = false;

    Category category() const;
    std::string mnemonic() const;

    bool is_branch() const { return opcode == Opcode::Jcc || opcode == Opcode::Jmp; }
    bool is_conditional_branch() const { return opcode == Opcode::Jcc; }
    bool is_string_op() const { return opcode == Opcode::Cmps || opcode == Opcode::Scas; }
    bool is_fence() const { return opcode == Opcode::Fence; }
    /// Explicit memory operand, if any.
    const MemOperand *memory_operand() const;
    /// Touches memory (explicit operand or implicit string access).
    bool accesses_memory() const { return is_string_op() || memory_operand() != nullptr; }

    friend bool operator==(const Instruction &, const Instruction &) = default;
};

struct Program {
    std::vector<Instruction> instructions;
    std::map<std::string, std::size_t> labels;  // label -> instruction index, may equal size()

    std::size_t size() const { return instructions.size(); }
    bool empty() const { return instructions.empty(); }
    /// Re-resolve every LabelRef target from the label map.
    void relink();

    friend bool operator==(const Program &, const Program &) = default;
};

struct Flags {
    bool zf = false;
    bool cf = false;
    bool sf = false;
    bool of = false;

    bool get(Flag f) const;
    void set(Flag f, bool v);
    friend bool operator==(const Flags &, const Flags &) = default;
};

using Memory = std::array<std::uint8_t, kPageSize>;

struct ArchState {
    std::array<std::uint64_t, kNumRegs> regs{};
    Flags flags;
    Memory memory{};
    std::size_t pc = 0;

    std::uint64_t reg(Reg r) const { return regs[static_cast<std::size_t>(r)]; }
    std::uint64_t &reg(Reg r) { return regs[static_cast<std::size_t>(r)]; }

    friend bool operator==(const ArchState &, const ArchState &) = default;
};

// =================================================================================================
// Locations, read/write sets and events
// =================================================================================================

/// A register, flag, sandbox byte or the program counter, packed into a dense id.
class Location {
  public:
    enum class Kind : std::uint8_t { Reg, Flag, Pc, Mem };

    static constexpr std::uint16_t kFlagBase = kNumRegs;
    static constexpr std::uint16_t kPcId = kFlagBase + kNumFlags;
    static constexpr std::uint16_t kMemBase = kPcId + 1;
    static constexpr std::uint16_t kCount = kMemBase + kPageSize;

    constexpr Location() = default;
    static constexpr Location reg(Reg r) { return Location(static_cast<std::uint16_t>(r)); }
    static constexpr Location flag(Flag f)
    {
        return Location(kFlagBase + static_cast<std::uint16_t>(f));
    }
    static constexpr Location pc() { return Location(kPcId); }
    static constexpr Location mem(std::size_t offset)
    {
        return Location(static_cast<std::uint16_t>(kMemBase + offset % kPageSize));
    }
    static constexpr Location from_id(std::uint16_t id) { return Location(id); }

    constexpr std::uint16_t id() const { return id_; }
    constexpr Kind kind() const
    {
        if (id_ < kFlagBase)
            return Kind::Reg;
        if (id_ < kPcId)
            return Kind::Flag;
        if (id_ == kPcId)
            return Kind::Pc;
        return Kind::Mem;
    }
    /// Register / flag number or memory offset.
    constexpr std::size_t index() const
    {
        switch (kind()) {
        case Kind::Reg: return id_;
        case Kind::Flag: return id_ - kFlagBase;
        case Kind::Pc: return 0;
        case Kind::Mem: return id_ - kMemBase;
        }
        return 0;
    }
    constexpr bool is_input() const { return id_ != kPcId; }
    std::string name() const;

    friend constexpr auto operator<=>(Location, Location) = default;

  private:
    constexpr explicit Location(std::uint16_t id) : id_(id) {}
    std::uint16_t id_ = 0;
};

struct ReadWriteSets {
    std::vector<Location> read;   // sorted, unique
    std::vector<Location> write;  // sorted, unique
};

struct MemRead {
    std::size_t offset = 0;
    unsigned size = 0;
    friend bool operator==(const MemRead &, const MemRead &) = default;
};
struct MemWrite {
    std::size_t offset = 0;
    unsigned size = 0;
    friend bool operator==(const MemWrite &, const MemWrite &) = default;
};
struct Branch {
    bool taken = false;
    std::size_t next_pc = 0;
    friend bool operator==(const Branch &, const Branch &) = default;
};
using ArchEvent = std::variant<MemRead, MemWrite, Branch>;

// =================================================================================================
// Errors
// =================================================================================================

enum class ParseErrorKind : std::uint8_t {
    UnknownMnemonic,
    UnresolvedLabel,
    OperandArity,
    BadOperand,
    DuplicateLabel,
    BackwardBranch,
};

class ParseError : public std::runtime_error {
  public:
    ParseError(ParseErrorKind kind, std::size_t line, const std::string &what);
    ParseErrorKind kind() const { return kind_; }
    std::size_t line() const { return line_; }

  private:
    ParseErrorKind kind_;
    std::size_t line_;
};

class DivideFault : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// =================================================================================================
// Names
// =================================================================================================

std::string reg_name(Reg r, Width w = Width::Qword);
std::string flag_name(Flag f);
std::string cond_name(Cond c);
std::string category_name(Category c);
std::optional<Category> category_from_name(const std::string &name);

}  // namespace relfuzz::isa
