#include "relfuzz/campaign.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "relfuzz/analysis.hpp"
#include "relfuzz/assembly.hpp"
#include "relfuzz/cig.hpp"
#include "relfuzz/contract.hpp"
#include "relfuzz/filters.hpp"
#include "relfuzz/rng.hpp"

namespace relfuzz::campaign {

using nlohmann::json;
using config::CampaignConfig;

std::uint64_t round_seed(const CampaignConfig &cfg, std::size_t round)
{
    return derive_seed(cfg.seed, round);
}

TestCase generate_case(const CampaignConfig &cfg, std::size_t round)
{
    const auto g = cfg.gen_config(round_seed(cfg, round));
    TestCase tc;
    tc.program = gen::generate_program(g);
    tc.inputs = gen::generate_inputs(cfg.inputs_per_program, g);
    return tc;
}

void boost_case(const CampaignConfig &cfg, std::size_t round, TestCase &tc)
{
    tc.boosted.clear();
    if (cfg.inputs_per_class < 2) {
        tc.boosted = tc.inputs;
        return;
    }
    const auto seed = round_seed(cfg, round);
    const contract::ContractModel model(cfg.contract, tc.program);
    for (std::size_t i = 0; i < tc.inputs.size(); ++i) {
        const auto r = cig::boost(model, tc.inputs[i], cfg.inputs_per_class,
                                  derive_seed(seed, 2 + i), cfg.entropy_bits);
        tc.tracking_steps += model.run(tc.inputs[i]).steps;
        tc.degenerate_boosts += r.degenerate;
        tc.boosted.push_back(tc.inputs[i]);
        for (const auto &s : r.siblings)
            tc.boosted.push_back(s);
    }
}

analysis::AnalysisResult analyze_case(const CampaignConfig &cfg, const isa::Program &program,
                                      const std::vector<InputData> &inputs, std::uint64_t *work)
{
    std::uint64_t spent = 0;
    const contract::ContractModel model(cfg.contract, program);
    std::vector<contract::CTrace> ctraces;
    ctraces.reserve(inputs.size());
    for (const auto &in : inputs) {
        auto run = model.run(in);
        spent += kWorkContractStep * run.steps;
        ctraces.push_back(std::move(run.trace));
    }
    const auto ms = dut::measure(program, inputs, cfg.uarch);
    std::vector<dut::HTrace> htraces;
    htraces.reserve(ms.size());
    for (const auto &m : ms) {
        spent += kWorkDutUop * m.counters.uops_issued;
        htraces.push_back(m.htrace);
    }
    auto result = analysis::analyze(program, inputs, ctraces, htraces, cfg.uarch);
    spent += kWorkDutUop * result.confirm_uops;
    if (work)
        *work += spent;
    return result;
}

RoundRecord run_round(const CampaignConfig &cfg, std::size_t round)
{
    RoundRecord rec;
    rec.round = round;
    rec.seed = round_seed(cfg, round);
    std::uint64_t work = 0;
    auto charge = [&](const std::vector<dut::Measurement> &ms) {
        for (const auto &m : ms)
            work += kWorkDutUop * m.counters.uops_issued;
    };
    try {
        auto tc = generate_case(cfg, round);
        rec.program = isa::render_program(tc.program);

        if (cfg.speculation_filter || cfg.observation_filter) {
            const auto ms = dut::measure(tc.program, tc.inputs, cfg.uarch);
            charge(ms);
            if (cfg.speculation_filter) {
                const auto v = filters::speculation_filter(ms);
                rec.speculation = {true, v.keep, v.evidence};
            }
            if (rec.speculation.keep && cfg.observation_filter) {
                std::uint64_t uops = 0;
                rec.observation.ran = true;
                rec.observation.keep =
                    filters::observation_filter(tc.program, tc.inputs, cfg.uarch, ms, &uops);
                work += kWorkDutUop * uops;
            }
            if (!rec.speculation.keep || !rec.observation.keep) {
                rec.work_units = work;
                return rec;
            }
        }

        rec.analyzed = true;
        boost_case(cfg, round, tc);
        work += kWorkTrackingStep * tc.tracking_steps;
        rec.degenerate_boosts = tc.degenerate_boosts;

        const auto result = analyze_case(cfg, tc.program, tc.boosted, &work);
        rec.inputs = tc.boosted.size();
        rec.classes = result.classes.size();
        rec.effective_inputs = result.effective_inputs;
        rec.suppressed = result.suppressed;
        for (std::size_t k = 0; k < result.violations.size(); ++k) {
            const auto &v = result.violations[k];
            rec.violations.push_back({std::to_string(round) + "-" + std::to_string(k), v.a, v.b,
                                      v.trace.text, v.htrace_a.hex(), v.htrace_b.hex(),
                                      tc.boosted[v.a], tc.boosted[v.b]});
        }
    } catch (const std::exception &e) {
        rec.error = e.what();
    }
    rec.work_units = work;
    return rec;
}

CampaignReport run_campaign(const CampaignConfig &cfg, const RunOptions &options)
{
    cfg.validate();
    CampaignReport report;
    report.config = cfg;
    report.fingerprint = cfg.fingerprint();
    const std::size_t jobs = std::max<std::size_t>(1, options.jobs);
    for (std::size_t start = 0; start < cfg.num_programs; start += jobs) {
        if (options.stop && options.stop->load()) {
            report.interrupted = true;
            break;
        }
        const std::size_t end = std::min(cfg.num_programs, start + jobs);
        std::vector<RoundRecord> batch(end - start);
        if (batch.size() == 1) {
            batch[0] = run_round(cfg, start);
        } else {
            std::vector<std::thread> workers;
            for (std::size_t i = 0; i < batch.size(); ++i)
                workers.emplace_back([&, i] { batch[i] = run_round(cfg, start + i); });
            for (auto &w : workers)
                w.join();
        }
        for (auto &r : batch) {
            if (options.on_round)
                options.on_round(r);
            report.rounds.push_back(std::move(r));
        }
    }
    return report;
}

Summary summarize(const std::vector<RoundRecord> &rounds)
{
    Summary s;
    s.cases = rounds.size();
    std::size_t spec_ran = 0, spec_kept = 0, obs_ran = 0, obs_kept = 0;
    std::size_t inputs = 0, effective = 0;
    for (const auto &r : rounds) {
        s.work_units += r.work_units;
        if (!r.error.empty())
            ++s.failed;
        else if (r.analyzed)
            ++s.analyzed;
        else
            ++s.discarded;
        spec_ran += r.speculation.ran;
        spec_kept += r.speculation.ran && r.speculation.keep;
        obs_ran += r.observation.ran;
        obs_kept += r.observation.ran && r.observation.keep;
        if (r.analyzed && r.error.empty()) {
            inputs += r.inputs;
            effective += r.effective_inputs;
        }
        s.violations += r.violations.size();
        if (!r.violations.empty()) {
            ++s.violating_cases;
            if (!s.detection_time)
                s.detection_time = s.work_units;
        }
    }
    s.speculation_pass = spec_ran ? double(spec_kept) / double(spec_ran) : 1.0;
    s.observation_pass = obs_ran ? double(obs_kept) / double(obs_ran) : 1.0;
    s.effectiveness = inputs ? double(effective) / double(inputs) : 0.0;
    s.testing_speed = s.work_units ? double(s.cases) * 1e6 / double(s.work_units) : 0.0;
    s.detection_rate = s.cases ? double(s.violations) / double(s.cases) : 0.0;
    return s;
}

const ViolationRecord *CampaignReport::find_violation(const std::string &id, std::size_t *round) const
{
    for (std::size_t i = 0; i < rounds.size(); ++i)
        for (const auto &v : rounds[i].violations)
            if (v.id == id) {
                if (round)
                    *round = i;
                return &v;
            }
    return nullptr;
}

// =================================================================================================
// JSON
// =================================================================================================

namespace {

std::string to_hex(const isa::Memory &m)
{
    static const char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * m.size());
    for (auto b : m) {
        out += digits[b >> 4];
        out += digits[b & 0xF];
    }
    return out;
}

isa::Memory from_hex(const std::string &s)
{
    if (s.size() != 2 * isa::kPageSize)
        throw std::runtime_error("memory image has the wrong length");
    isa::Memory m{};
    for (std::size_t i = 0; i < m.size(); ++i)
        m[i] = static_cast<std::uint8_t>(std::stoul(s.substr(2 * i, 2), nullptr, 16));
    return m;
}

json input_json(const InputData &in)
{
    return {{"regs", in.regs},
            {"flags",
             {{"zf", in.flags.zf}, {"cf", in.flags.cf}, {"sf", in.flags.sf}, {"of", in.flags.of}}},
            {"memory", to_hex(in.memory)}};
}

InputData input_from(const json &j)
{
    InputData in;
    const auto regs = j.at("regs").get<std::vector<std::uint64_t>>();
    if (regs.size() != in.regs.size())
        throw std::runtime_error("wrong register count");
    std::copy(regs.begin(), regs.end(), in.regs.begin());
    const auto &f = j.at("flags");
    in.flags.zf = f.at("zf").get<bool>();
    in.flags.cf = f.at("cf").get<bool>();
    in.flags.sf = f.at("sf").get<bool>();
    in.flags.of = f.at("of").get<bool>();
    in.memory = from_hex(j.at("memory").get<std::string>());
    return in;
}

json filter_json(const FilterRecord &f)
{
    return {{"ran", f.ran},
            {"keep", f.keep},
            {"uops_issued", f.evidence.uops_issued},
            {"uops_retired", f.evidence.uops_retired},
            {"recovery_events", f.evidence.recovery_events}};
}

FilterRecord filter_from(const json &j)
{
    FilterRecord f;
    f.ran = j.at("ran").get<bool>();
    f.keep = j.at("keep").get<bool>();
    f.evidence.uops_issued = j.at("uops_issued").get<std::uint64_t>();
    f.evidence.uops_retired = j.at("uops_retired").get<std::uint64_t>();
    f.evidence.recovery_events = j.at("recovery_events").get<std::uint64_t>();
    return f;
}

json round_json(const RoundRecord &r)
{
    json violations = json::array();
    for (const auto &v : r.violations)
        violations.push_back({{"id", v.id},
                              {"a", v.a},
                              {"b", v.b},
                              {"ctrace", v.ctrace},
                              {"htrace_a", v.htrace_a},
                              {"htrace_b", v.htrace_b},
                              {"input_a", input_json(v.input_a)},
                              {"input_b", input_json(v.input_b)}});
    return {{"type", "round"},
            {"round", r.round},
            {"seed", r.seed},
            {"program", r.program},
            {"speculation_filter", filter_json(r.speculation)},
            {"observation_filter", filter_json(r.observation)},
            {"analyzed", r.analyzed},
            {"inputs", r.inputs},
            {"classes", r.classes},
            {"effective_inputs", r.effective_inputs},
            {"degenerate_boosts", r.degenerate_boosts},
            {"suppressed", r.suppressed},
            {"violations", violations},
            {"work_units", r.work_units},
            {"error", r.error}};
}

RoundRecord round_from(const json &j)
{
    RoundRecord r;
    r.round = j.at("round").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.program = j.at("program").get<std::string>();
    r.speculation = filter_from(j.at("speculation_filter"));
    r.observation = filter_from(j.at("observation_filter"));
    r.analyzed = j.at("analyzed").get<bool>();
    r.inputs = j.at("inputs").get<std::size_t>();
    r.classes = j.at("classes").get<std::size_t>();
    r.effective_inputs = j.at("effective_inputs").get<std::size_t>();
    r.degenerate_boosts = j.at("degenerate_boosts").get<std::size_t>();
    r.suppressed = j.at("suppressed").get<std::size_t>();
    for (const auto &v : j.at("violations"))
        r.violations.push_back({v.at("id").get<std::string>(), v.at("a").get<std::size_t>(),
                                v.at("b").get<std::size_t>(), v.at("ctrace").get<std::string>(),
                                v.at("htrace_a").get<std::string>(),
                                v.at("htrace_b").get<std::string>(), input_from(v.at("input_a")),
                                input_from(v.at("input_b"))});
    r.work_units = j.at("work_units").get<std::uint64_t>();
    r.error = j.at("error").get<std::string>();
    return r;
}

}  // namespace

std::string to_jsonl(const CampaignReport &report)
{
    std::string out;
    out += json{{"type", "header"},
                {"config", report.config.canonical()},
                {"fingerprint", report.fingerprint},
                {"semantics", config::kSemanticsVersion}}
               .dump();
    out += '\n';
    for (const auto &r : report.rounds) {
        out += round_json(r).dump();
        out += '\n';
    }
    out += json{{"type", "trailer"}, {"rounds", report.rounds.size()},
                {"interrupted", report.interrupted}}
               .dump();
    out += '\n';
    return out;
}

std::string summary_json(const CampaignReport &report)
{
    const auto s = report.summary();
    json j = {{"fingerprint", report.fingerprint},
              {"interrupted", report.interrupted},
              {"cases", s.cases},
              {"cases_discarded", s.discarded},
              {"cases_analyzed", s.analyzed},
              {"cases_failed", s.failed},
              {"violations", s.violations},
              {"violating_cases", s.violating_cases},
              {"work_units", s.work_units},
              {"detection_time_work_units", nullptr},
              {"testing_speed_cases_per_mwu", s.testing_speed},
              {"detection_rate_per_case", s.detection_rate},
              {"speculation_filter_pass", s.speculation_pass},
              {"observation_filter_pass", s.observation_pass},
              {"input_effectiveness", s.effectiveness}};
    if (s.detection_time)
        j["detection_time_work_units"] = *s.detection_time;
    return j.dump(2) + "\n";
}

CampaignReport parse_jsonl(const std::string &text)
{
    CampaignReport report;
    std::istringstream in(text);
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error &e) {
            throw std::runtime_error(std::string("malformed report line: ") + e.what());
        }
        const auto type = j.value("type", "");
        if (type == "header") {
            report.config = config::parse_config_text(j.at("config").get<std::string>());
            report.fingerprint = j.at("fingerprint").get<std::string>();
            header = true;
        } else if (type == "round") {
            report.rounds.push_back(round_from(j));
        } else if (type == "trailer") {
            report.interrupted = j.at("interrupted").get<bool>();
        } else {
            throw std::runtime_error("unknown report record type '" + type + "'");
        }
    }
    if (!header)
        throw std::runtime_error("report has no header line");
    return report;
}

void write_report(const CampaignReport &report, const std::string &path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    out << to_jsonl(report);
    std::ofstream summary(path + ".summary.json", std::ios::binary);
    if (!summary)
        throw std::runtime_error("cannot write " + path + ".summary.json");
    summary << summary_json(report);
}

CampaignReport read_report(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_jsonl(buf.str());
}

Reproduction reproduce(const CampaignReport &report, const std::string &violation_id,
                       std::optional<dut::Clause> disable)
{
    std::size_t index = 0;
    const auto *v = report.find_violation(violation_id, &index);
    if (!v)
        throw std::invalid_argument("no violation '" + violation_id + "' in the report");
    if (report.fingerprint != report.config.fingerprint())
        throw SeedMismatch("configuration fingerprint " + report.fingerprint +
                           " does not match this build (" + report.config.fingerprint() + ")");
    const auto &stored = report.rounds[index];
    if (stored.seed != round_seed(report.config, stored.round))
        throw SeedMismatch("round " + std::to_string(stored.round) + " seed " +
                           std::to_string(stored.seed) + " is not derived from the campaign seed");

    auto cfg = report.config;
    if (disable)
        cfg.uarch.set(*disable, false);
    Reproduction out;
    out.rerun = run_round(cfg, stored.round);
    if (!out.rerun.error.empty()) {
        out.detail = "round failed: " + out.rerun.error;
        return out;
    }
    if (out.rerun.program != stored.program) {
        out.detail = "regenerated program differs from the report";
        return out;
    }
    for (const auto &r : out.rerun.violations)
        if (r.a == v->a && r.b == v->b && r.ctrace == v->ctrace && r.input_a == v->input_a &&
            r.input_b == v->input_b) {
            out.confirmed = true;
            out.detail = "confirmed: inputs " + std::to_string(v->a) + " and " +
                         std::to_string(v->b) + " share the contract trace, hardware traces " +
                         r.htrace_a + " vs " + r.htrace_b;
            return out;
        }
    if (!out.rerun.analyzed)
        out.detail = "refuted: the test case no longer passes the filters";
    else
        out.detail = "refuted: the pair no longer violates the contract";
    if (disable)
        out.detail += " with " + dut::clause_name(*disable) + " disabled (clause-dependent)";
    return out;
}

}  // namespace relfuzz::campaign
