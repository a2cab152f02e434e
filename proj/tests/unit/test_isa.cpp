#include <random>

#include "doctest.h"
#include "relfuzz/assembly.hpp"
#include "relfuzz/sandbox.hpp"
#include "relfuzz/semantics.hpp"

using namespace relfuzz::isa;

namespace {

Instruction one(const std::string &text)
{
    auto p = parse_program(text);
    REQUIRE(p.size() == 1);
    return p.instructions[0];
}

std::vector<Location> locs(std::initializer_list<Location> l)
{
    std::vector<Location> v(l);
    std::sort(v.begin(), v.end());
    return v;
}

ArchState random_state(std::mt19937_64 &rng)
{
    ArchState s;
    for (auto &r : s.regs)
        r = rng();
    s.reg(Reg::RC) &= 0xFF;  // keep string loops short
    s.flags = {static_cast<bool>(rng() & 1), static_cast<bool>(rng() & 1),
               static_cast<bool>(rng() & 1), static_cast<bool>(rng() & 1)};
    for (auto &b : s.memory)
        b = static_cast<std::uint8_t>(rng());
    return s;
}

std::uint64_t location_value(const ArchState &s, Location l)
{
    switch (l.kind()) {
    case Location::Kind::Reg: return s.regs[l.index()];
    case Location::Kind::Flag: return s.flags.get(static_cast<Flag>(l.index()));
    case Location::Kind::Pc: return s.pc;
    case Location::Kind::Mem: return s.memory[l.index()];
    }
    return 0;
}

void perturb(ArchState &s, Location l, std::mt19937_64 &rng)
{
    switch (l.kind()) {
    case Location::Kind::Reg: s.regs[l.index()] = rng(); break;
    case Location::Kind::Flag: {
        auto f = static_cast<Flag>(l.index());
        s.flags.set(f, !s.flags.get(f));
        break;
    }
    case Location::Kind::Pc: break;
    case Location::Kind::Mem: s.memory[l.index()] ^= static_cast<std::uint8_t>(rng() | 1); break;
    }
}

// Mnemonic sample covering every category; used by the property tests below.
const char *const kSample[] = {
    "ADD RA, RB",          "ADC RAD, 7",           "SUB qword ptr [RB + 8], RC",
    "SBB RCW, RDW",        "CMP RA, 10",           "INC byte ptr [RSI]",
    "DEC RDIW",            "NEG RB",               "DIV RB",
    "MUL qword ptr [RB]",  "IMUL RAD, RCD",        "CLC",
    "STC",                 "CMC",                  "AND RA, [RB + RC]",
    "OR RBB, 0x11",        "XOR RC, RD",           "NOT dword ptr [RDI]",
    "TEST RA, RB",         "LOCK ADD [RB], RA",    "LOCK XADD [RB], RC",
    "XADD RA, RB",         "CMPXCHG [RB], RD",     "CMPXCHG RCD, RDD",
    "MOV RA, [RB + 3]",    "MOVZX RA, byte ptr [RB]", "MOVSX RAD, RBW",
    "XCHG RA, [RB]",       "BSWAP RSI",            "SETNE RAB",
    "SETB byte ptr [RB]",  "CMOVL RA, [RB]",       "CMOVE RCW, RDW",
    "NOP",                 "CBW",                  "CWDE",
    "CDQE",                "CWD",                  "CDQ",
    "CQO",                 "BT RA, RB",            "BTS word ptr [RB], 9",
    "BTR RC, 63",          "BTC dword ptr [RB], RAD", "BSF RA, RB",
    "BSR RAW, [RB]",       "FENCE",                "REPE CMPSB",
    "REPNE CMPSW",         "REPE SCASD",           "REPNE SCASQ",
};

}  // namespace

// =================================================================================================
// Parsing and rendering
// =================================================================================================

TEST_CASE("empty text parses to an empty program")
{
    CHECK(parse_program("").empty());
    CHECK(parse_program("\n  # only a comment\n").empty());
}

TEST_CASE("branch example parses with the end label after the last instruction")
{
    auto p = parse_program("CMP RA, 10\nJNE .END\nMOV RA, [RB]\n.END:\n");
    REQUIRE(p.size() == 3);
    CHECK(p.labels.at(".END") == 3);
    CHECK(p.instructions[1].opcode == Opcode::Jcc);
    CHECK(p.instructions[1].cond == Cond::NE);
    CHECK(std::get<LabelRef>(p.instructions[1].operands[0]).target == 3);
    const auto &mem = std::get<MemOperand>(p.instructions[2].operands[1]);
    CHECK(mem.base == Reg::RB);
    CHECK(mem.width == Width::Qword);
}

TEST_CASE("parse errors name the line")
{
    auto kind_at = [](const std::string &text) {
        try {
            parse_program(text);
        } catch (const ParseError &e) {
            return std::make_pair(e.kind(), e.line());
        }
        FAIL("expected ParseError");
        return std::make_pair(ParseErrorKind::BadOperand, std::size_t{0});
    };
    CHECK(kind_at("FOO RA") == std::make_pair(ParseErrorKind::UnknownMnemonic, std::size_t{1}));
    CHECK(kind_at("NOP\nJNE .nowhere") ==
          std::make_pair(ParseErrorKind::UnresolvedLabel, std::size_t{2}));
    CHECK(kind_at("NOP\nNOP\nADD RA") == std::make_pair(ParseErrorKind::OperandArity, std::size_t{3}));
    CHECK(kind_at(".a:\n.a:\nNOP").first == ParseErrorKind::DuplicateLabel);
    CHECK(kind_at(".top:\nNOP\nJMP .top").first == ParseErrorKind::BackwardBranch);
    CHECK(kind_at("MOV [RA], [RB]").first == ParseErrorKind::BadOperand);
    CHECK(kind_at("INC [RA]").first == ParseErrorKind::BadOperand);  // ambiguous width
    CHECK(kind_at("CMPSB").first == ParseErrorKind::BadOperand);     // missing REP prefix
}

TEST_CASE("instrumentation comment and inline labels")
{
    auto p = parse_program(".bb0: AND RB, 0xFF8 # instrumentation\nMOV RA, [RB]  # load\n");
    REQUIRE(p.size() == 2);
    CHECK(p.labels.at(".bb0") == 0);
    CHECK(p.instructions[0].is_instrumentation);
    CHECK_FALSE(p.instructions[1].is_instrumentation);
    CHECK(std::get<Immediate>(p.instructions[0].operands[1]).value == 0xFF8);
}

TEST_CASE("immediate spellings")
{
    CHECK(std::get<Immediate>(one("MOV RA, 0b1111").operands[1]).value == 15);
    CHECK(std::get<Immediate>(one("MOV RA, -5").operands[1]).value == -5);
    CHECK(std::get<Immediate>(one("mov ra, 0X1f").operands[1]).value == 31);
    CHECK(std::get<MemOperand>(one("MOV RA, [RB + RC - 8]").operands[1]).disp == -8);
}

TEST_CASE("every sample mnemonic round-trips through text")
{
    for (const char *text : kSample) {
        CAPTURE(text);
        auto p = parse_program(text);
        auto again = parse_program(render_program(p));
        CHECK(again == p);
    }
    auto p = parse_program(
        "AND RB, 0xFF8 # instrumentation\nCMP RA, RB\nJG .l1\nMOV RA, [RB]\nJMP .l2\n.l1:\n"
        ".l3: ADD RA, 1\n.l2:\n");
    CHECK(parse_program(render_program(p)) == p);
}

// =================================================================================================
// Semantics
// =================================================================================================

TEST_CASE("basic steps")
{
    ArchState s;
    s.reg(Reg::RA) = 1;
    auto out = arch_step(s, one("ADD RA, 1"));
    CHECK(out.state.reg(Reg::RA) == 2);
    CHECK_FALSE(out.state.flags.zf);
    CHECK(out.state.pc == 1);

    s.reg(Reg::RA) = 10;
    CHECK(arch_step(s, one("CMP RA, 10")).state.flags.zf);
}

TEST_CASE("sub-register writes zero or merge")
{
    std::mt19937_64 rng(1);
    for (int i = 0; i < 200; ++i) {
        ArchState s;
        const auto old = rng(), v = rng();
        s.reg(Reg::RB) = v;
        s.reg(Reg::RA) = old;
        CHECK(arch_step(s, one("MOV RAD, RBD")).state.reg(Reg::RA) == (v & 0xFFFFFFFF));
        s.reg(Reg::RA) = old;
        CHECK(arch_step(s, one("MOV RAW, RBW")).state.reg(Reg::RA) ==
              ((old & ~0xFFFFull) | (v & 0xFFFF)));
        s.reg(Reg::RA) = old;
        CHECK(arch_step(s, one("MOV RAB, RBB")).state.reg(Reg::RA) == ((old & ~0xFFull) | (v & 0xFF)));
    }
}

TEST_CASE("arithmetic flags agree with an overflow-builtin oracle")
{
    std::mt19937_64 rng(7);
    const auto add = one("ADD RAD, RBD");
    const auto sub = one("SUB RAD, RBD");
    for (int i = 0; i < 2000; ++i) {
        ArchState s;
        // bias towards edge values so carries and overflows happen often
        const std::uint32_t edge[] = {0, 1, 0x7FFFFFFF, 0x80000000, 0xFFFFFFFF};
        const std::uint32_t a = (rng() & 3) ? static_cast<std::uint32_t>(rng()) : edge[rng() % 5];
        const std::uint32_t b = (rng() & 3) ? static_cast<std::uint32_t>(rng()) : edge[rng() % 5];
        s.reg(Reg::RA) = a;
        s.reg(Reg::RB) = b;

        std::uint32_t ur;
        std::int32_t sr;
        const bool cf = __builtin_add_overflow(a, b, &ur);
        const bool of = __builtin_add_overflow(static_cast<std::int32_t>(a),
                                               static_cast<std::int32_t>(b), &sr);
        auto r = arch_step(s, add).state;
        CHECK(r.reg(Reg::RA) == ur);
        CHECK(r.flags.cf == cf);
        CHECK(r.flags.of == of);
        CHECK(r.flags.zf == (ur == 0));
        CHECK(r.flags.sf == (static_cast<std::int32_t>(ur) < 0));

        const bool bcf = a < b;
        const bool bof = __builtin_sub_overflow(static_cast<std::int32_t>(a),
                                                static_cast<std::int32_t>(b), &sr);
        r = arch_step(s, sub).state;
        CHECK(r.reg(Reg::RA) == static_cast<std::uint32_t>(a - b));
        CHECK(r.flags.cf == bcf);
        CHECK(r.flags.of == bof);
    }
}

TEST_CASE("conditions agree with signed and unsigned comparisons after CMP")
{
    std::mt19937_64 rng(3);
    const auto cmp = one("CMP RA, RB");
    for (int i = 0; i < 1000; ++i) {
        ArchState s;
        const std::uint64_t a = rng() % 5 == 0 ? 0 : rng() >> (rng() % 64);
        const std::uint64_t b = rng() % 4 == 0 ? a : rng() >> (rng() % 64);
        s.reg(Reg::RA) = a;
        s.reg(Reg::RB) = b;
        const auto f = arch_step(s, cmp).state.flags;
        const auto sa = static_cast<std::int64_t>(a), sb = static_cast<std::int64_t>(b);
        CHECK(eval_cond(Cond::E, f) == (a == b));
        CHECK(eval_cond(Cond::B, f) == (a < b));
        CHECK(eval_cond(Cond::A, f) == (a > b));
        CHECK(eval_cond(Cond::BE, f) == (a <= b));
        CHECK(eval_cond(Cond::L, f) == (sa < sb));
        CHECK(eval_cond(Cond::GE, f) == (sa >= sb));
        CHECK(eval_cond(Cond::LE, f) == (sa <= sb));
        CHECK(eval_cond(Cond::G, f) == (sa > sb));
    }
}

TEST_CASE("REPNE CMPSW with no match walks the whole count")
{
    ArchState s;
    s.reg(Reg::RC) = 3;
    s.reg(Reg::RSI) = 0x100;
    s.reg(Reg::RDI) = 0x200;
    for (int i = 0; i < 6; ++i) {
        s.memory[0x100 + i] = 0x11;
        s.memory[0x200 + i] = 0x22;
    }
    auto out = arch_step(s, one("REPNE CMPSW"));
    CHECK(out.state.reg(Reg::RC) == 0);
    CHECK(out.state.reg(Reg::RSI) == 0x106);
    CHECK(out.state.reg(Reg::RDI) == 0x206);
    CHECK(out.state.pc == 1);
    // hand-unrolled reference: per iteration one word from each string, source first
    const std::vector<ArchEvent> expected = {
        MemRead{0x100, 2}, MemRead{0x200, 2}, MemRead{0x102, 2},
        MemRead{0x202, 2}, MemRead{0x104, 2}, MemRead{0x204, 2},
    };
    CHECK(out.events == expected);
}

TEST_CASE("REPE CMPSB stops at the first mismatch")
{
    ArchState s;
    s.reg(Reg::RC) = 10;
    s.reg(Reg::RSI) = 0;
    s.reg(Reg::RDI) = 64;
    s.memory[2] = 1;  // strings equal up to index 2
    StepInfo info;
    std::vector<ArchEvent> ev;
    info = execute(s, one("REPE CMPSB"), &ev);
    CHECK(info.string_iterations == 3);
    CHECK_FALSE(info.count_exhausted);
    CHECK(s.reg(Reg::RC) == 7);
    CHECK_FALSE(s.flags.zf);
}

TEST_CASE("division")
{
    ArchState s;
    s.reg(Reg::RA) = 100;
    s.reg(Reg::RD) = 0;
    s.reg(Reg::RB) = 7;
    auto r = arch_step(s, one("DIV RB")).state;
    CHECK(r.reg(Reg::RA) == 14);
    CHECK(r.reg(Reg::RD) == 2);
    s.reg(Reg::RB) = 0;
    CHECK_THROWS_AS(arch_step(s, one("DIV RB")), DivideFault);
    s.reg(Reg::RB) = 1;
    s.reg(Reg::RD) = 1;
    CHECK_THROWS_AS(arch_step(s, one("DIV RB")), DivideFault);
}

TEST_CASE("accesses wrap inside the page")
{
    ArchState s;
    s.reg(Reg::RB) = 0xFFE;
    s.reg(Reg::RA) = 0x0807060504030201;
    auto out = arch_step(s, one("MOV [RB], RA"));
    CHECK(out.state.memory[0xFFE] == 0x01);
    CHECK(out.state.memory[0xFFF] == 0x02);
    CHECK(out.state.memory[0x000] == 0x03);
    CHECK(out.state.memory[0x005] == 0x08);
}

TEST_CASE("arch_step is deterministic")
{
    std::mt19937_64 rng(11);
    for (const char *text : kSample) {
        const auto instr = one(text);
        const auto s = random_state(rng);
        try {
            auto a = arch_step(s, instr);
            auto b = arch_step(s, instr);
            CHECK(a.state == b.state);
            CHECK(a.events == b.events);
        } catch (const DivideFault &) {
        }
    }
}

// =================================================================================================
// Read and write sets
// =================================================================================================

TEST_CASE("read/write set table")
{
    ArchState s;
    auto rw = read_write_sets(one("CMP RA, 10"), s);
    CHECK(rw.read == locs({Location::pc(), Location::reg(Reg::RA)}));
    CHECK(rw.write == locs({Location::flag(Flag::ZF), Location::flag(Flag::CF),
                            Location::flag(Flag::SF), Location::flag(Flag::OF)}));

    rw = read_write_sets(one("NOP"), s);
    CHECK(rw.read == locs({Location::pc()}));
    CHECK(rw.write.empty());

    s.reg(Reg::RB) = 8;
    rw = read_write_sets(one("MOV RA, [RB]"), s);
    std::vector<Location> expected = {Location::pc(), Location::reg(Reg::RB)};
    for (int i = 8; i < 16; ++i)
        expected.push_back(Location::mem(i));
    std::sort(expected.begin(), expected.end());
    CHECK(rw.read == expected);
    CHECK(rw.write == locs({Location::reg(Reg::RA)}));

    rw = read_write_sets(one("JNE .x\n.x:"), s);
    CHECK(rw.read == locs({Location::pc(), Location::flag(Flag::ZF)}));
    CHECK(rw.write == locs({Location::pc()}));

    rw = read_write_sets(one("MOV RAB, RBB"), s);
    CHECK(rw.read == locs({Location::pc(), Location::reg(Reg::RA), Location::reg(Reg::RB)}));

    rw = read_write_sets(one("ADC RA, RB"), s);
    CHECK(std::count(rw.read.begin(), rw.read.end(), Location::flag(Flag::CF)) == 1);
}

TEST_CASE("every instruction reads PC and control flow writes it")
{
    std::mt19937_64 rng(5);
    for (const char *text : kSample) {
        const auto rw = read_write_sets(one(text), random_state(rng));
        CHECK(std::binary_search(rw.read.begin(), rw.read.end(), Location::pc()));
    }
    auto p = parse_program("JMP .a\n.a: JL .b\n.b:");
    for (const auto &instr : p.instructions) {
        const auto rw = read_write_sets(instr, ArchState{});
        CHECK(std::binary_search(rw.write.begin(), rw.write.end(), Location::pc()));
    }
}

TEST_CASE("frame property: locations outside the read set do not influence the step")
{
    std::mt19937_64 rng(99);
    for (const char *text : kSample) {
        CAPTURE(text);
        const auto instr = one(text);
        for (int trial = 0; trial < 30; ++trial) {
            auto s = random_state(rng);
            // keep string loops and divisions short and non-faulting
            s.reg(Reg::RC) &= 0x7;
            s.reg(Reg::RD) &= 0x3;
            s.reg(Reg::RB) |= 0x10;
            StepOutcome a;
            try {
                a = arch_step(s, instr);
            } catch (const DivideFault &) {
                continue;
            }
            const auto rw = read_write_sets(instr, s);
            auto t = s;
            for (std::uint16_t id = 0; id < Location::kCount; ++id) {
                const auto l = Location::from_id(id);
                if (!std::binary_search(rw.read.begin(), rw.read.end(), l) && rng() % 3 == 0)
                    perturb(t, l, rng);
            }
            const auto b = arch_step(t, instr);
            CHECK(a.events == b.events);
            CHECK(a.state.pc == b.state.pc);
            for (auto l : rw.write)
                CHECK(location_value(a.state, l) == location_value(b.state, l));
            // and nothing outside the write set changed
            for (std::uint16_t id = 0; id < Location::kCount; ++id) {
                const auto l = Location::from_id(id);
                if (l.kind() == Location::Kind::Pc ||
                    std::binary_search(rw.write.begin(), rw.write.end(), l))
                    continue;
                if (location_value(a.state, l) != location_value(s, l))
                    FAIL_CHECK("unlisted write to " << l.name());
            }
        }
    }
}

// =================================================================================================
// Sandbox validation
// =================================================================================================

TEST_CASE("sandbox validation")
{
    CHECK(validate_sandbox(parse_program("AND RB, 0xFFF # instrumentation\nMOV RA, [RB]")).empty());

    auto d = validate_sandbox(parse_program("MOV RA, [RB]"));
    REQUIRE(d.size() == 1);
    CHECK(d[0].message == "unmasked base RB at index 0");

    d = validate_sandbox(
        parse_program("AND RB, 0xFFF # instrumentation\nADD RB, 5000\nMOV RA, [RB]"));
    REQUIRE(d.size() == 1);
    CHECK(d[0].index == 2);

    // a mask that is not flagged as instrumentation does not count
    CHECK_FALSE(validate_sandbox(parse_program("AND RB, 0xFFF\nMOV RA, [RB]")).empty());
    // a mask larger than the page does not count
    CHECK_FALSE(
        validate_sandbox(parse_program("AND RB, 0x1FFF # instrumentation\nMOV RA, [RB]")).empty());
}

TEST_CASE("sandbox validation joins over both branch paths")
{
    const char *one_path = "CMP RA, 0\nJE .skip\nAND RB, 0xFF8 # instrumentation\n.skip:\n"
                           "MOV RA, [RB]\n";
    CHECK(validate_sandbox(parse_program(one_path)).size() == 1);
    const char *both_paths = "AND RB, 0xFF8 # instrumentation\nCMP RA, 0\nJE .skip\n"
                             "AND RB, 0xFF0 # instrumentation\n.skip:\nMOV RA, [RB]\n";
    CHECK(validate_sandbox(parse_program(both_paths)).empty());
    CHECK(validate_sandbox(parse_program("AND RSI, 0xFFF # instrumentation\n"
                                         "REPE CMPSB"))
              .size() == 1);  // RDI left unmasked
}

TEST_CASE("division guards")
{
    const char *ok = "AND RD, 0xF # instrumentation\nOR RB, 0x11 # instrumentation\nDIV RB";
    CHECK(validate_sandbox(parse_program(ok)).empty());
    CHECK(validate_sandbox(parse_program("OR RB, 0x11 # instrumentation\nDIV RB")).size() == 1);
    CHECK(validate_sandbox(parse_program("AND RD, 0xF # instrumentation\nOR RB, 0x11 # "
                                         "instrumentation\nADD RD, 1\nDIV RB"))
              .size() == 1);
    CHECK(validate_sandbox(parse_program("AND RD, 0x20 # instrumentation\nOR RB, 0x11 # "
                                         "instrumentation\nDIV RB"))
              .size() == 1);  // RD may exceed the divisor
    CHECK(validate_sandbox(parse_program("AND RD, 0xF # instrumentation\nAND RB, 0xFF8 # "
                                         "instrumentation\nDIV qword ptr [RB]"))
              .size() == 1);
}

TEST_CASE("validated division never faults")
{
    std::mt19937_64 rng(4);
    const auto p = parse_program("AND RD, 0xF # instrumentation\nOR RB, 0x11 # instrumentation\nDIV RB");
    for (int i = 0; i < 500; ++i) {
        auto s = random_state(rng);
        for (const auto &instr : p.instructions)
            CHECK_NOTHROW(execute(s, instr, nullptr));
    }
}

TEST_CASE("the address is formed before the base register is overwritten")
{
    ArchState s;
    s.reg(Reg::RA) = 0x40;
    store_bytes(s.memory, 0x40, 8, 0x123);
    auto out = arch_step(s, one("XCHG RA, [RA]"));
    CHECK(out.state.reg(Reg::RA) == 0x123);
    CHECK(load_bytes(out.state.memory, 0x40, 8) == 0x40);
    const std::vector<ArchEvent> expected = {MemRead{0x40, 8}, MemWrite{0x40, 8}};
    CHECK(out.events == expected);

    s.reg(Reg::RA) = 0x40;
    s.reg(Reg::RB) = 0;
    out = arch_step(s, one("CMPXCHG [RA], RB"));  // mismatch loads the old value into RA
    CHECK(out.state.reg(Reg::RA) == 0x123);
    CHECK(std::get<MemWrite>(out.events[1]).offset == 0x40);
}
