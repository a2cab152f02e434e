///
/// File: Test-case filters that run before any contract analysis.
///
///       The speculation filter keeps a test case only if the DUT counters show transient
///       execution for some input. The observation filter keeps it only if some input's
///       hardware trace differs from the trace of the same program with a FENCE after every
///       instruction.
///
#pragma once

#include <vector>

#include "relfuzz/dut.hpp"
#include "relfuzz/input.hpp"
#include "relfuzz/isa.hpp"

namespace relfuzz::filters {

struct Verdict {
    bool keep = false;
    dut::PerfCounters evidence;  // summed over all inputs
};

/// Over measurements the caller already took.
Verdict speculation_filter(const std::vector<dut::Measurement> &measurements);
Verdict speculation_filter(const isa::Program &program, const std::vector<InputData> &inputs,
                           const dut::UarchConfig &cfg);

/// FENCE after every instruction, instrumentation included; labels follow their instruction.
isa::Program serialize(const isa::Program &program);

/// `measurements` are those of `program` itself; the micro-ops the serialized reference run
/// issued are added to `uops`.
bool observation_filter(const isa::Program &program, const std::vector<InputData> &inputs,
                        const dut::UarchConfig &cfg,
                        const std::vector<dut::Measurement> &measurements,
                        std::uint64_t *uops = nullptr);
bool observation_filter(const isa::Program &program, const std::vector<InputData> &inputs,
                        const dut::UarchConfig &cfg);

}  // namespace relfuzz::filters
