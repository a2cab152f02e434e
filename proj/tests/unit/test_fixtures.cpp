#include <doctest.h>

#include "relfuzz/fixtures.hpp"
#include "relfuzz/semantics.hpp"

using namespace relfuzz;
using dut::Clause;
using dut::UarchConfig;

namespace {

UarchConfig from_mask(unsigned mask)
{
    UarchConfig cfg;
    for (std::size_t i = 0; i < dut::kNumClauses; ++i)
        cfg.set(dut::kAllClauses[i], (mask >> i) & 1);
    return cfg;
}

}  // namespace

TEST_CASE("every fixture leaks with its clause and only then")
{
    for (auto id : fixtures::kLeakIds) {
        const auto r = fixtures::reproducer(std::string(id));
        CAPTURE(id);
        const auto on = fixtures::run(r, r.uarch());
        CHECK(on.speculation.keep);
        CHECK(on.observation);
        REQUIRE(on.analysis.violations.size() == 1);
        CHECK(on.analysis.violations[0].a == r.violation.first);
        CHECK(on.analysis.violations[0].b == r.violation.second);

        auto off = r.uarch();
        off.set(r.clause, false);
        const auto none = fixtures::run(r, off);
        CHECK(none.analysis.violations.empty());
        CHECK(!none.speculation.keep);
    }
}

TEST_CASE("clause isolation over every toggle combination")
{
    for (auto id : fixtures::kLeakIds) {
        const auto r = fixtures::reproducer(std::string(id));
        for (unsigned mask = 0; mask < (1u << dut::kNumClauses); ++mask) {
            const auto cfg = from_mask(mask);
            CAPTURE(id);
            CAPTURE(mask);
            const auto out = fixtures::run(r, cfg);
            if (cfg.enabled(r.clause)) {
                REQUIRE(out.analysis.violations.size() == 1);
                CHECK(out.analysis.violations[0].a == r.violation.first);
                CHECK(out.analysis.violations[0].b == r.violation.second);
            } else {
                CHECK(out.analysis.violations.empty());
            }
        }
    }
}

TEST_CASE("zdi fixture: equal quotients, different zero-forced quotients")
{
    using u128 = unsigned __int128;
    const auto r = fixtures::reproducer("zdi");
    REQUIRE(r.inputs.size() == 2);
    std::uint64_t arch[2], forced[2];
    for (std::size_t i = 0; i < 2; ++i) {
        // the fixture's instrumentation: RD &= 0xF, RC |= 0x11
        const auto rd = r.inputs[i].regs[static_cast<std::size_t>(isa::Reg::RD)] & 0xF;
        const auto rc = r.inputs[i].regs[static_cast<std::size_t>(isa::Reg::RC)] | 0x11;
        const auto ra = r.inputs[i].regs[static_cast<std::size_t>(isa::Reg::RA)];
        REQUIRE(rd != 0);
        REQUIRE(rd < rc);
        arch[i] = static_cast<std::uint64_t>(((u128(rd) << 64) | ra) / rc);
        forced[i] = ra / rc;
    }
    CHECK(arch[0] == arch[1]);
    CHECK((forced[0] & 0xFF8) != (forced[1] & 0xFF8));
}

TEST_CASE("sco fixtures: agreement past the bound shortens the overrun")
{
    const auto r = fixtures::reproducer("sco_scas");
    const auto ms = dut::measure(r.program, r.inputs, r.uarch());
    CHECK(ms[0].htrace.bitmap == 0b110);
    CHECK(ms[1].htrace.bitmap == 0b010);
    CHECK(ms[0].counters.uops_issued - ms[0].counters.uops_retired >
          ms[1].counters.uops_issued - ms[1].counters.uops_retired);
}

TEST_CASE("malformed fixtures are rejected")
{
    CHECK_THROWS_AS(fixtures::parse_reproducer("NOP\n"), std::invalid_argument);
    CHECK_THROWS_AS(fixtures::parse_reproducer("# @leak: x\n# @clause: nope\nNOP\n"),
                    std::invalid_argument);
    CHECK_THROWS_AS(fixtures::parse_reproducer("# @leak: x\n# @clause: sco\n# @input: RQ=1\n"
                                               "# @violation: 0 1\nNOP\n"),
                    std::invalid_argument);
    CHECK_THROWS_AS(fixtures::parse_reproducer("# @leak: x\n# @clause: sco\n# @input: RA=1\n"
                                               "# @violation: 0 1\nNOP\n"),
                    std::invalid_argument);
    CHECK_THROWS_AS(fixtures::reproducer("v2"), std::invalid_argument);
}
