#include "relfuzz/cig.hpp"

#include <bitset>
#include <map>

#include "relfuzz/semantics.hpp"

namespace relfuzz::cig {

using isa::Location;

namespace {

/// Bits of byte `i` (0..7) of a word that the entropy range can set.
std::uint8_t byte_range(unsigned entropy_bits, std::size_t i)
{
    return static_cast<std::uint8_t>(entropy_mask(entropy_bits) >> (8 * i));
}

}  // namespace

bool mutate_outside(const InputData &input, const deps::DepSet &deps, Rng &rng,
                    unsigned entropy_bits, InputData &out)
{
    std::bitset<Location::kCount> fixed;
    for (auto l : deps)
        fixed.set(l.id());
    const auto mask = entropy_mask(entropy_bits);

    out = input;
    std::vector<Location> mutable_locations;
    for (auto r : isa::kAllRegs) {
        const auto l = Location::reg(r);
        if (fixed[l.id()])
            continue;
        out.set(l, rng() & mask);
        mutable_locations.push_back(l);
    }
    for (auto f : isa::kAllFlags) {
        const auto l = Location::flag(f);
        if (fixed[l.id()])
            continue;
        out.set(l, rng() & 1);
        mutable_locations.push_back(l);
    }
    for (std::size_t word = 0; word < isa::kPageSize; word += 8) {
        const auto fresh = rng() & mask;
        for (std::size_t i = 0; i < 8; ++i) {
            const auto l = Location::mem(word + i);
            if (fixed[l.id()] || byte_range(entropy_bits, i) == 0)
                continue;
            out.memory[word + i] = static_cast<std::uint8_t>(fresh >> (8 * i));
            mutable_locations.push_back(l);
        }
    }
    if (mutable_locations.empty())
        return false;

    for (auto l : mutable_locations)
        if (out.get(l) != input.get(l))
            return true;
    // every redraw happened to repeat the original value: flip the lowest bit of one location
    const auto l = mutable_locations[uniform_below(rng, mutable_locations.size())];
    out.set(l, input.get(l) ^ 1);
    return true;
}

BoostResult boost(const contract::ContractModel &model, const InputData &input, std::size_t k,
                  std::uint64_t seed, unsigned entropy_bits)
{
    BoostResult out;
    auto run = deps::track(model, input);
    out.deps = std::move(run.deps);
    out.trace = std::move(run.trace);
    Rng rng(seed);
    for (std::size_t i = 1; i < k; ++i) {
        InputData sibling;
        if (!mutate_outside(input, out.deps, rng, entropy_bits, sibling))
            out.degenerate = true;
        out.siblings.push_back(std::move(sibling));
    }
    return out;
}

BoostResult boost(const contract::ContractSpec &spec, const isa::Program &program,
                  const InputData &input, std::size_t k, std::uint64_t seed, unsigned entropy_bits)
{
    return boost(contract::ContractModel(spec, program), input, k, seed, entropy_bits);
}

double effectiveness(const std::vector<contract::CTrace> &traces)
{
    if (traces.empty())
        return 0.0;
    std::map<std::string, std::size_t> counts;
    for (const auto &t : traces)
        ++counts[t.canonical_text()];
    std::size_t effective = 0;
    for (const auto &[text, n] : counts)
        if (n >= 2)
            effective += n;
    return static_cast<double>(effective) / static_cast<double>(traces.size());
}

}  // namespace relfuzz::cig
