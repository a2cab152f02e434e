#include "doctest.h"
#include "relfuzz/assembly.hpp"
#include "relfuzz/deps.hpp"
#include "test_util.hpp"

using namespace relfuzz;
using namespace relfuzz::contract;
using isa::Location;
using isa::Reg;
using testutil::input_with;

namespace {

const ContractSpec kSeq{};
const ContractSpec kCond{ObservationClause::CT, ExecutionClause::Cond, 250, 1};

const char *const kExample4 = "CMP RA, 10\n"
                              "JNE .l1\n"
                              "AND RB, 0xFFF # instrumentation\n"
                              "MOV RA, [RB]\n"
                              ".l1:\n"
                              "AND RA, 0xFFF # instrumentation\n"
                              "MOV RB, [RA]\n";

bool contains(const deps::DepSet &d, Location l) { return std::binary_search(d.begin(), d.end(), l); }

}  // namespace

TEST_CASE("branch-then-load example depends only on RA")
{
    const auto p = isa::parse_program(kExample4);
    const auto d = deps::trace_dependencies(kSeq, p, input_with({{Reg::RA, 20}, {Reg::RB, 5}}));
    CHECK(deps::names(d) == std::vector<std::string>{"RA"});
}

TEST_CASE("single load depends on its base")
{
    const auto p = isa::parse_program("AND RB, 0xFFF # instrumentation\nMOV RA, [RB]\n");
    CHECK(deps::names(deps::trace_dependencies(kSeq, p, input_with({{Reg::RB, 9}}))) ==
          std::vector<std::string>{"RB"});
}

TEST_CASE("COND adds the wrong-path address")
{
    const auto p = isa::parse_program(kExample4);
    const auto d = deps::trace_dependencies(kCond, p, input_with({{Reg::RA, 20}, {Reg::RB, 5}}));
    CHECK(contains(d, Location::reg(Reg::RA)));
    CHECK(contains(d, Location::reg(Reg::RB)));
    CHECK_FALSE(contains(d, Location::pc()));
}

TEST_CASE("nothing observed, nothing depended on")
{
    const auto p = isa::parse_program("ADD RA, RB\nNOP\n");
    CHECK(deps::trace_dependencies(kSeq, p, InputData{}).empty());
}

TEST_CASE("tracked trace equals the plain contract trace")
{
    Rng rng(8);
    for (int trial = 0; trial < 500; ++trial) {
        const auto cfg = testutil::random_config(rng);
        const auto p = gen::generate_program(cfg);
        for (const auto &spec : {kSeq, kCond}) {
            ContractModel model(spec, p);
            for (const auto &in : gen::generate_inputs(2, cfg))
                CHECK(deps::track(model, in).trace == model.trace(in));
        }
    }
}

TEST_CASE("soundness: mutating locations outside Dep keeps the trace")
{
    Rng rng(12);
    std::size_t counterexamples = 0;
    for (int trial = 0; trial < 600; ++trial) {
        const auto cfg = testutil::random_config(rng);
        const auto p = gen::generate_program(cfg);
        const auto &spec = trial % 2 ? kCond : kSeq;
        ContractModel model(spec, p);
        const auto in = gen::generate_inputs(1, cfg)[0];
        const auto run = deps::track(model, in);
        std::vector<Location> free;
        for (std::uint16_t id = 0; id < Location::kCount; ++id) {
            const auto l = Location::from_id(id);
            if (l.is_input() && !contains(run.deps, l))
                free.push_back(l);
        }
        for (int m = 0; m < 10; ++m) {
            auto mutated = in;
            for (auto l : free)
                if (uniform_below(rng, 2) == 0)
                    mutated.set(l, rng());
            if (model.trace(mutated) != run.trace) {
                if (counterexamples == 0)
                    MESSAGE(isa::render_program(p) << "\n---\n" << run.trace.canonical_text()
                            << "---\n" << model.trace(mutated).canonical_text() << "deps: "
                            << deps::names(run.deps).size());
                ++counterexamples;
            }
        }
    }
    CHECK(counterexamples == 0);
}

TEST_CASE("COND never shrinks Dep")
{
    Rng rng(13);
    for (int trial = 0; trial < 500; ++trial) {
        const auto cfg = testutil::random_config(rng);
        const auto p = gen::generate_program(cfg);
        const auto in = gen::generate_inputs(1, cfg)[0];
        const auto seq = deps::trace_dependencies(kSeq, p, in);
        const auto cond = deps::trace_dependencies(kCond, p, in);
        CHECK(std::includes(cond.begin(), cond.end(), seq.begin(), seq.end()));
    }
}
