#include "relfuzz/analysis.hpp"

#include <map>

namespace relfuzz::analysis {

std::vector<EquivalenceClass> build_classes(const std::vector<TraceKey> &keys)
{
    std::vector<EquivalenceClass> classes;
    // hash -> indices of classes with that hash; text decides among them
    std::map<std::uint64_t, std::vector<std::size_t>> by_hash;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        auto &bucket = by_hash[keys[i].hash];
        bool placed = false;
        for (auto c : bucket)
            if (classes[c].key.text == keys[i].text) {
                classes[c].members.push_back(i);
                placed = true;
                break;
            }
        if (!placed) {
            bucket.push_back(classes.size());
            classes.push_back({keys[i], {i}});
        }
    }
    return classes;
}

std::vector<EquivalenceClass> build_classes(const std::vector<contract::CTrace> &traces)
{
    std::vector<TraceKey> keys;
    keys.reserve(traces.size());
    for (const auto &t : traces)
        keys.push_back({t.hash(), t.canonical_text()});
    return build_classes(keys);
}

std::vector<std::pair<std::size_t, std::size_t>>
differing_pairs(const EquivalenceClass &cls, const std::vector<dut::HTrace> &htraces)
{
    std::vector<std::pair<std::size_t, std::size_t>> out;
    const auto &m = cls.members;
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = i + 1; j < m.size(); ++j)
            if (htraces[m[i]] != htraces[m[j]])
                out.emplace_back(m[i], m[j]);
    return out;
}

std::vector<Violation> detect_violations(const std::vector<EquivalenceClass> &classes,
                                         const std::vector<dut::HTrace> &htraces)
{
    std::vector<Violation> out;
    for (std::size_t c = 0; c < classes.size(); ++c) {
        const auto &m = classes[c].members;
        // the first member that differs from an earlier one fixes the pair
        bool found = false;
        for (std::size_t i = 0; i < m.size() && !found; ++i)
            for (std::size_t j = i + 1; j < m.size(); ++j)
                if (htraces[m[i]] != htraces[m[j]]) {
                    out.push_back({c, m[i], m[j], classes[c].key, htraces[m[i]], htraces[m[j]]});
                    found = true;
                    break;
                }
    }
    return out;
}

namespace {

dut::HTrace measure_at(const isa::Program &program, const std::vector<InputData> &inputs,
                       const dut::UarchConfig &cfg, std::size_t position, std::size_t replacement,
                       std::uint64_t *uops)
{
    std::vector<InputData> seq(inputs.begin(), inputs.begin() + static_cast<long>(position));
    seq.push_back(inputs[replacement]);
    const auto ms = dut::measure(program, seq, cfg);
    if (uops)
        for (const auto &m : ms)
            *uops += m.counters.uops_issued;
    return ms.back().htrace;
}

}  // namespace

bool confirm_pair(const isa::Program &program, const std::vector<InputData> &inputs,
                  const dut::UarchConfig &cfg, const std::vector<dut::HTrace> &htraces,
                  std::size_t a, std::size_t b, std::uint64_t *uops)
{
    auto retry = cfg;
    retry.noise_seed = derive_seed(cfg.noise_seed, 2 + a * inputs.size() + b);
    if (measure_at(program, inputs, retry, a, b, uops) == htraces[a])
        return false;
    return measure_at(program, inputs, retry, b, a, uops) != htraces[b];
}

AnalysisResult analyze(const isa::Program &program, const std::vector<InputData> &inputs,
                       const std::vector<contract::CTrace> &ctraces,
                       const std::vector<dut::HTrace> &htraces, const dut::UarchConfig &cfg,
                       const AnalysisOptions &options)
{
    AnalysisResult r;
    r.classes = build_classes(ctraces);
    for (const auto &cls : r.classes)
        if (!cls.ineffective())
            r.effective_inputs += cls.members.size();

    for (const auto &candidate : detect_violations(r.classes, htraces)) {
        const auto pairs = differing_pairs(r.classes[candidate.class_index], htraces);
        bool confirmed = false;
        for (std::size_t k = 0; k < pairs.size() && k < options.max_confirm_attempts; ++k) {
            const auto [a, b] = pairs[k];
            if (confirm_pair(program, inputs, cfg, htraces, a, b, &r.confirm_uops)) {
                r.violations.push_back(
                    {candidate.class_index, a, b, candidate.trace, htraces[a], htraces[b]});
                confirmed = true;
                break;
            }
        }
        if (!confirmed)
            ++r.suppressed;
    }
    return r;
}

}  // namespace relfuzz::analysis
