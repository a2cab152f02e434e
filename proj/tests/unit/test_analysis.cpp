#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "relfuzz/analysis.hpp"
#include "relfuzz/assembly.hpp"
#include "relfuzz/cig.hpp"
#include "relfuzz/generator.hpp"
#include "test_util.hpp"

using namespace relfuzz;
using namespace relfuzz::isa;
using namespace relfuzz::analysis;
using relfuzz::testutil::input_with;

namespace {

const char *const kV1 = "AND RB, 0xFFF # instrumentation\n"
                        "CMP RA, 10\n"
                        "JNE .END\n"
                        "MOV RA, [RB]\n"
                        ".END:\n";

std::vector<InputData> paper_inputs()
{
    return {input_with({{Reg::RA, 10}, {Reg::RB, 5}}), input_with({{Reg::RA, 10}, {Reg::RB, 20}}),
            input_with({{Reg::RA, 40}, {Reg::RB, 10}}), input_with({{Reg::RA, 20}, {Reg::RB, 70}})};
}

std::vector<dut::HTrace> htraces_of(const std::vector<dut::Measurement> &ms)
{
    std::vector<dut::HTrace> out;
    for (const auto &m : ms)
        out.push_back(m.htrace);
    return out;
}

dut::HTrace h(std::uint64_t bits) { return dut::HTrace{bits}; }

/// Naive Def. 1 over all pairs: the first (i, j) with equal trace text and differing htraces,
/// per trace text.
std::map<std::string, std::pair<std::size_t, std::size_t>>
naive(const std::vector<TraceKey> &keys, const std::vector<dut::HTrace> &hs)
{
    std::map<std::string, std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < keys.size(); ++i)
        for (std::size_t j = i + 1; j < keys.size(); ++j)
            if (keys[i].text == keys[j].text && hs[i] != hs[j] && !out.count(keys[i].text))
                out[keys[i].text] = {i, j};
    return out;
}

}  // namespace

TEST_CASE("classes group equal traces and flag singletons")
{
    const std::vector<TraceKey> keys = {{7, "load *1\n"}, {7, "load *1\n"}, {9, "load *2\n"}};
    const auto classes = build_classes(keys);
    REQUIRE(classes.size() == 2);
    CHECK(classes[0].members == std::vector<std::size_t>{0, 1});
    CHECK_FALSE(classes[0].ineffective());
    CHECK(classes[1].members == std::vector<std::size_t>{2});
    CHECK(classes[1].ineffective());

    const auto one = build_classes(std::vector<contract::CTrace>(5));
    REQUIRE(one.size() == 1);
    CHECK(one[0].members.size() == 5);
}

TEST_CASE("hash collisions with different text are split")
{
    const std::vector<TraceKey> keys = {{1, "load *1\n"}, {1, "load *2\n"}, {1, "load *1\n"}};
    const auto classes = build_classes(keys);
    REQUIRE(classes.size() == 2);
    CHECK(classes[0].members == std::vector<std::size_t>{0, 2});
    CHECK(classes[1].members == std::vector<std::size_t>{1});
}

TEST_CASE("the V1 example yields one violation on inputs 3 and 4")
{
    const auto p = parse_program(kV1);
    const auto inputs = paper_inputs();
    std::vector<contract::CTrace> ct;
    for (const auto &in : inputs)
        ct.push_back(contract::collect_ctrace({}, p, in));
    const auto hs = htraces_of(dut::measure(p, inputs, {}));
    const auto r = analyze(p, inputs, ct, hs, {});
    CHECK(r.classes.size() == 3);
    CHECK(r.effective_inputs == 2);
    REQUIRE(r.violations.size() == 1);
    CHECK(r.violations[0].a == 2);
    CHECK(r.violations[0].b == 3);
    CHECK(r.violations[0].trace.text == "jump @4\n");
    CHECK(r.violations[0].htrace_a != r.violations[0].htrace_b);
    CHECK(r.suppressed == 0);

    // COND explains the transient load: different classes, nothing to report
    const contract::ContractSpec cond{contract::ObservationClause::CT,
                                      contract::ExecutionClause::Cond, 250, 1};
    ct.clear();
    for (const auto &in : inputs)
        ct.push_back(contract::collect_ctrace(cond, p, in));
    CHECK(analyze(p, inputs, ct, hs, {}).violations.empty());
}

TEST_CASE("the first differing pair of a class is named")
{
    const std::vector<TraceKey> keys(3, TraceKey{1, "x"});
    const auto classes = build_classes(keys);
    CHECK(detect_violations(classes, {h(1), h(1), h(2)})[0].a == 0);
    CHECK(detect_violations(classes, {h(1), h(1), h(2)})[0].b == 2);
    CHECK(detect_violations(classes, {h(2), h(1), h(1)})[0].b == 1);
    CHECK(detect_violations(classes, {h(1), h(1), h(1)}).empty());
}

TEST_CASE("detection agrees with the naive all-pairs check")
{
    Rng rng(31);
    std::size_t mismatches = 0;
    for (int batch = 0; batch < 10000; ++batch) {
        const std::size_t n = 1 + uniform_below(rng, 12);
        const std::size_t alphabet = 1 + uniform_below(rng, 4);
        std::vector<TraceKey> keys;
        std::vector<dut::HTrace> hs;
        for (std::size_t i = 0; i < n; ++i) {
            const auto t = uniform_below(rng, alphabet);
            keys.push_back({t % 2, "t" + std::to_string(t)});  // forced collisions
            hs.push_back(h(uniform_below(rng, 3)));
        }
        const auto expected = naive(keys, hs);
        const auto found = detect_violations(build_classes(keys), hs);
        bool same = found.size() == expected.size();
        for (const auto &v : found) {
            const auto it = expected.find(v.trace.text);
            same = same && it != expected.end() && it->second == std::make_pair(v.a, v.b);
        }
        if (!same)
            ++mismatches;
    }
    CHECK(mismatches == 0);
}

TEST_CASE("permuting inputs never changes which classes violate")
{
    Rng rng(32);
    for (int batch = 0; batch < 500; ++batch) {
        const std::size_t n = 2 + uniform_below(rng, 10);
        std::vector<TraceKey> keys;
        std::vector<dut::HTrace> hs;
        for (std::size_t i = 0; i < n; ++i) {
            const auto t = uniform_below(rng, 3);
            keys.push_back({t, "t" + std::to_string(t)});
            hs.push_back(h(uniform_below(rng, 2)));
        }
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<TraceKey> pk;
        std::vector<dut::HTrace> ph;
        for (auto i : perm) {
            pk.push_back(keys[i]);
            ph.push_back(hs[i]);
        }
        std::set<std::string> a, b;
        for (const auto &v : detect_violations(build_classes(keys), hs))
            a.insert(v.trace.text);
        for (const auto &v : detect_violations(build_classes(pk), ph))
            b.insert(v.trace.text);
        CHECK(a == b);
    }
}

TEST_CASE("differences that vanish on re-measurement are suppressed")
{
    const auto p = parse_program("AND RB, 0xFFF # instrumentation\nMOV RA, [RB]\n");
    const std::vector<InputData> inputs = {input_with({{Reg::RB, 8}}), input_with({{Reg::RB, 8}})};
    std::vector<contract::CTrace> ct;
    for (const auto &in : inputs)
        ct.push_back(contract::collect_ctrace({}, p, in));
    auto hs = htraces_of(dut::measure(p, inputs, {}));
    hs[1].bitmap ^= 1ull << 40;  // a corrupted measurement
    const auto r = analyze(p, inputs, ct, hs, {});
    CHECK(r.violations.empty());
    CHECK(r.suppressed == 1);
}

TEST_CASE("with only branch prediction, CT-COND reports nothing while CT-SEQ does")
{
    const contract::ContractSpec seq{};
    const contract::ContractSpec cond{contract::ObservationClause::CT,
                                      contract::ExecutionClause::Cond, 250, 1};
    Rng rng(41);
    std::size_t seq_violations = 0, cond_violations = 0, monotonicity = 0;
    for (int trial = 0; trial < 300; ++trial) {
        gen::GenConfig gcfg;
        gcfg.categories = {Category::Cond, Category::Dxfr, Category::Logi};
        gcfg.program_size = 12;
        gcfg.mem_accesses = 4;
        gcfg.basic_blocks = 3;
        gcfg.input_entropy_bits = 8;
        gcfg.seed = rng();
        const auto p = gen::generate_program(gcfg);
        const auto base = gen::generate_inputs(6, gcfg);

        std::size_t found[2] = {0, 0};
        for (int which = 0; which < 2; ++which) {
            const auto &spec = which == 0 ? seq : cond;
            const contract::ContractModel model(spec, p);
            std::vector<InputData> inputs;
            for (std::size_t i = 0; i < base.size(); ++i) {
                inputs.push_back(base[i]);
                for (auto &s : cig::boost(model, base[i], 3, gcfg.seed + i, 8).siblings)
                    inputs.push_back(s);
            }
            std::vector<contract::CTrace> ct;
            for (const auto &in : inputs)
                ct.push_back(model.trace(in));
            const auto hs = htraces_of(dut::measure(p, inputs, {}));
            found[which] = analyze(p, inputs, ct, hs, {}).violations.size();
        }
        seq_violations += found[0];
        cond_violations += found[1];
        if (found[0] == 0 && found[1] > 0)
            ++monotonicity;
    }
    CHECK(seq_violations > 0);
    CHECK(cond_violations == 0);
    CHECK(monotonicity == 0);
}
