#include "relfuzz/filters.hpp"

namespace relfuzz::filters {

using namespace isa;

Verdict speculation_filter(const std::vector<dut::Measurement> &measurements)
{
    Verdict v;
    for (const auto &m : measurements) {
        const auto &c = m.counters;
        v.evidence.uops_issued += c.uops_issued;
        v.evidence.uops_retired += c.uops_retired;
        v.evidence.recovery_events += c.recovery_events;
        if (c.recovery_events > 0 || c.uops_issued > c.uops_retired)
            v.keep = true;
    }
    return v;
}

Verdict speculation_filter(const Program &program, const std::vector<InputData> &inputs,
                           const dut::UarchConfig &cfg)
{
    return speculation_filter(dut::measure(program, inputs, cfg));
}

Program serialize(const Program &program)
{
    Program out;
    out.instructions.reserve(2 * program.size());
    Instruction fence;
    fence.opcode = Opcode::Fence;
    for (const auto &instr : program.instructions) {
        out.instructions.push_back(instr);
        out.instructions.push_back(fence);
    }
    for (const auto &[name, index] : program.labels)
        out.labels[name] = 2 * index;
    out.relink();
    return out;
}

bool observation_filter(const Program &program, const std::vector<InputData> &inputs,
                        const dut::UarchConfig &cfg,
                        const std::vector<dut::Measurement> &measurements, std::uint64_t *uops)
{
    // independent noise for the reference run
    auto ref_cfg = cfg;
    ref_cfg.noise_seed = derive_seed(cfg.noise_seed, 1);
    const auto reference = dut::measure(serialize(program), inputs, ref_cfg);
    if (uops)
        for (const auto &m : reference)
            *uops += m.counters.uops_issued;
    for (std::size_t i = 0; i < measurements.size() && i < reference.size(); ++i)
        if (measurements[i].htrace != reference[i].htrace)
            return true;
    return false;
}

bool observation_filter(const Program &program, const std::vector<InputData> &inputs,
                        const dut::UarchConfig &cfg)
{
    return observation_filter(program, inputs, cfg, dut::measure(program, inputs, cfg));
}

}  // namespace relfuzz::filters
