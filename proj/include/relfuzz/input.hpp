#pragma once

#include <array>
#include <cstdint>

#include "relfuzz/isa.hpp"
#include "relfuzz/rng.hpp"

namespace relfuzz {

/// Initial values of every input location: registers, flags and the sandbox page.
struct InputData {
    std::array<std::uint64_t, isa::kNumRegs> regs{};
    isa::Flags flags;
    isa::Memory memory{};

    isa::ArchState to_state() const;

    /// Value of one input location (a whole register, a flag bit or a byte).
    std::uint64_t get(isa::Location l) const;
    void set(isa::Location l, std::uint64_t v);

    friend bool operator==(const InputData &, const InputData &) = default;
};

/// Registers and every 8-byte memory word are uniform in [0, 2^entropy_bits); flags are fair coins.
InputData random_input(Rng &rng, unsigned entropy_bits);

/// Mask of the values reachable with `entropy_bits` bits.
constexpr std::uint64_t entropy_mask(unsigned entropy_bits)
{
    return entropy_bits >= 64 ? ~0ull : (1ull << entropy_bits) - 1;
}

}  // namespace relfuzz
