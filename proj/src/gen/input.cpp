#include "relfuzz/input.hpp"

#include "relfuzz/semantics.hpp"

namespace relfuzz {

isa::ArchState InputData::to_state() const
{
    isa::ArchState s;
    s.regs = regs;
    s.flags = flags;
    s.memory = memory;
    s.pc = 0;
    return s;
}

std::uint64_t InputData::get(isa::Location l) const
{
    switch (l.kind()) {
    case isa::Location::Kind::Reg: return regs[l.index()];
    case isa::Location::Kind::Flag: return flags.get(static_cast<isa::Flag>(l.index()));
    case isa::Location::Kind::Mem: return memory[l.index()];
    case isa::Location::Kind::Pc: break;
    }
    return 0;
}

void InputData::set(isa::Location l, std::uint64_t v)
{
    switch (l.kind()) {
    case isa::Location::Kind::Reg: regs[l.index()] = v; break;
    case isa::Location::Kind::Flag: flags.set(static_cast<isa::Flag>(l.index()), v != 0); break;
    case isa::Location::Kind::Mem: memory[l.index()] = static_cast<std::uint8_t>(v); break;
    case isa::Location::Kind::Pc: break;
    }
}

InputData random_input(Rng &rng, unsigned entropy_bits)
{
    const auto mask = entropy_mask(entropy_bits);
    InputData in;
    for (auto &r : in.regs)
        r = rng() & mask;
    for (auto f : isa::kAllFlags)
        in.flags.set(f, (rng() & 1) != 0);
    for (std::size_t off = 0; off < isa::kPageSize; off += 8)
        isa::store_bytes(in.memory, off, 8, rng() & mask);
    return in;
}

}  // namespace relfuzz
