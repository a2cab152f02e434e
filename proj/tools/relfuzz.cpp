// relfuzz: command-line driver for campaigns, minimization, reproduction and statistics.
//
// Exit codes: 0 = ran and found no violation, 1 = violation found (for `reproduce`: the
// violation was confirmed), 2 = usage, configuration or input error.

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "relfuzz/assembly.hpp"
#include "relfuzz/campaign.hpp"
#include "relfuzz/config.hpp"
#include "relfuzz/filters.hpp"
#include "relfuzz/fixtures.hpp"
#include "relfuzz/minimize.hpp"

using namespace relfuzz;

namespace {

constexpr int kClean = 0;
constexpr int kViolation = 1;
constexpr int kError = 2;

std::atomic<bool> g_stop{false};

extern "C" void on_sigint(int) { g_stop.store(true); }

struct Clock {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void print_summary(const campaign::CampaignReport &report, std::ostream &out)
{
    const auto s = report.summary();
    char line[256];
    out << "test cases:         " << s.cases << (report.interrupted ? " (interrupted)" : "") << "\n";
    out << "  discarded:        " << s.discarded << "\n";
    out << "  analyzed:         " << s.analyzed << "\n";
    if (s.failed)
        out << "  failed:           " << s.failed << "\n";
    out << "violations:         " << s.violations << " in " << s.violating_cases << " test cases\n";
    out << "work units:         " << s.work_units << "\n";
    if (s.detection_time)
        out << "detection time:     " << *s.detection_time << " work units\n";
    else
        out << "detection time:     none (no violation)\n";
    std::snprintf(line, sizeof line, "testing speed:      %.3f test cases per million work units\n",
                  s.testing_speed);
    out << line;
    std::snprintf(line, sizeof line, "detection rate:     %.6f violations per test case\n",
                  s.detection_rate);
    out << line;
    std::snprintf(line, sizeof line, "speculation filter: %.1f%% kept\n", 100 * s.speculation_pass);
    out << line;
    std::snprintf(line, sizeof line, "observation filter: %.1f%% kept\n", 100 * s.observation_pass);
    out << line;
    std::snprintf(line, sizeof line, "effective inputs:   %.1f%%\n", 100 * s.effectiveness);
    out << line;
}

void print_violation(const campaign::ViolationRecord &v, std::ostream &out)
{
    out << "violation " << v.id << ": inputs " << v.a << " and " << v.b << ", htraces "
        << v.htrace_a << " / " << v.htrace_b << "\n";
}

int cmd_fuzz(const std::string &config_path, std::optional<std::size_t> n,
             std::optional<std::size_t> i, std::optional<std::uint64_t> seed,
             const std::string &out_path, std::size_t jobs)
{
    auto cfg = config::parse_config_file(config_path);
    if (n)
        cfg.num_programs = *n;
    if (i)
        cfg.inputs_per_program = *i;
    if (seed)
        cfg.seed = *seed;
    cfg.validate();

    std::signal(SIGINT, on_sigint);
    Clock clock;
    campaign::RunOptions options;
    options.jobs = jobs;
    options.stop = &g_stop;
    options.on_round = [](const campaign::RoundRecord &r) {
        if (!r.error.empty())
            std::cerr << "round " << r.round << " failed: " << r.error << "\n";
        for (const auto &v : r.violations)
            print_violation(v, std::cout);
    };
    const auto report = campaign::run_campaign(cfg, options);
    campaign::write_report(report, out_path);
    print_summary(report, std::cout);
    std::cout << "report:             " << out_path << "\n";
    std::fprintf(stderr, "wall time: %.3f s\n", clock.seconds());
    return report.summary().violations ? kViolation : kClean;
}

// A test case to minimize: the program, the fixed inputs and the predicate over them.
struct Subject {
    isa::Program program;
    std::vector<InputData> inputs;
    minimize::Predicate predicate;
};

minimize::Predicate speculation_predicate(const dut::UarchConfig &uarch)
{
    return [uarch](const isa::Program &p, const std::vector<InputData> &in) {
        return filters::speculation_filter(p, in, uarch).keep;
    };
}

Subject campaign_subject(const config::CampaignConfig &cfg, const std::string &id,
                         const std::string &predicate)
{
    const auto dash = id.find('-');
    if (dash == std::string::npos)
        throw CLI::ValidationError("--violation", "expected <round>-<k>");
    const auto round = std::stoull(id.substr(0, dash));
    if (round >= cfg.num_programs)
        throw CLI::ValidationError("--violation", "round out of range for this configuration");
    const auto rec = campaign::run_round(cfg, round);
    bool found = false;
    for (const auto &v : rec.violations)
        found |= v.id == id;
    if (!found)
        throw std::invalid_argument("round " + std::to_string(round) + " has no violation " + id);
    auto tc = campaign::generate_case(cfg, round);
    campaign::boost_case(cfg, round, tc);
    Subject s{tc.program, tc.boosted, {}};
    if (predicate == "speculation")
        s.predicate = speculation_predicate(cfg.uarch);
    else
        s.predicate = [cfg](const isa::Program &p, const std::vector<InputData> &in) {
            return !campaign::analyze_case(cfg, p, in).violations.empty();
        };
    return s;
}

Subject fixture_subject(const std::string &id, const std::string &predicate)
{
    const auto r = fixtures::reproducer(id);
    Subject s{r.program, r.inputs, {}};
    if (predicate == "speculation")
        s.predicate = speculation_predicate(r.uarch());
    else
        s.predicate = [r](const isa::Program &p, const std::vector<InputData> &) {
            auto copy = r;
            copy.program = p;
            return !fixtures::run(copy, copy.uarch()).analysis.violations.empty();
        };
    return s;
}

int cmd_minimize(const std::string &config_path, const std::string &report_path,
                 const std::string &violation, const std::string &fixture,
                 const std::string &predicate, const std::string &out_path)
{
    Subject s;
    if (!fixture.empty()) {
        s = fixture_subject(fixture, predicate);
    } else {
        if (violation.empty())
            throw CLI::ValidationError("--violation", "required unless --fixture is given");
        config::CampaignConfig cfg;
        if (!report_path.empty()) {
            const auto report = campaign::read_report(report_path);
            if (report.fingerprint != report.config.fingerprint())
                throw campaign::SeedMismatch("report fingerprint does not match this build");
            cfg = report.config;
        } else {
            cfg = config::parse_config_file(config_path);
        }
        s = campaign_subject(cfg, violation, predicate);
    }
    Clock clock;
    const auto before = minimize::candidates(s.program).size();
    const auto minimal = minimize::minimize(s.program, s.inputs, s.predicate);
    const auto text = isa::render_program(minimal);
    if (out_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream(out_path) << text;
    }
    std::cerr << "minimized " << before << " -> " << minimize::candidates(minimal).size()
              << " instructions\n";
    std::fprintf(stderr, "wall time: %.3f s\n", clock.seconds());
    return kClean;
}

int cmd_reproduce(const std::string &report_path, const std::string &violation,
                  const std::string &fixture, const std::string &disable)
{
    std::optional<dut::Clause> clause;
    if (!disable.empty()) {
        clause = dut::clause_from_name(disable);
        if (!clause)
            throw CLI::ValidationError("--disable", "unknown clause '" + disable + "'");
    }
    if (!fixture.empty()) {
        const auto r = fixtures::reproducer(fixture);
        auto uarch = r.uarch();
        if (clause)
            uarch.set(*clause, false);
        const auto out = fixtures::run(r, uarch);
        std::cout << "speculation filter: " << (out.speculation.keep ? "keep" : "reject") << "\n";
        std::cout << "observation filter: " << (out.observation ? "keep" : "reject") << "\n";
        for (const auto &v : out.analysis.violations)
            std::cout << "violation: inputs " << v.a << " and " << v.b << ", htraces "
                      << v.htrace_a.hex() << " / " << v.htrace_b.hex() << "\n";
        const bool expected = !out.analysis.violations.empty() &&
                              out.analysis.violations[0].a == r.violation.first &&
                              out.analysis.violations[0].b == r.violation.second;
        std::cout << (expected ? "confirmed" : "refuted") << "\n";
        return expected ? kViolation : kClean;
    }
    if (report_path.empty() || violation.empty())
        throw CLI::ValidationError("reproduce", "--report and --violation are required");
    const auto report = campaign::read_report(report_path);
    const auto r = campaign::reproduce(report, violation, clause);
    std::cout << r.detail << "\n";
    return r.confirmed ? kViolation : kClean;
}

int cmd_stats(const std::string &report_path, bool json)
{
    const auto report = campaign::read_report(report_path);
    if (json)
        std::cout << campaign::summary_json(report);
    else
        print_summary(report, std::cout);
    return kClean;
}

}  // namespace

int main(int argc, char **argv)
{
    CLI::App app{"relfuzz: relational testing of a simulated CPU against speculation contracts"};
    app.require_subcommand(1);

    std::string config_path, out_path = "report.jsonl";
    std::optional<std::size_t> n, i;
    std::optional<std::uint64_t> seed;
    std::size_t jobs = 1;
    auto *fuzz = app.add_subcommand("fuzz", "run a testing campaign");
    fuzz->add_option("-c,--config", config_path, "campaign configuration (YAML)")->required();
    fuzz->add_option("-n,--num-programs", n, "number of test programs");
    fuzz->add_option("-i,--inputs", i, "inputs per program");
    fuzz->add_option("--seed", seed, "campaign seed");
    fuzz->add_option("--out", out_path, "report file (JSONL); the summary goes to <out>.summary.json");
    fuzz->add_option("--jobs", jobs, "rounds run in parallel")->check(CLI::PositiveNumber);

    std::string min_config, min_report, min_violation, min_fixture, predicate = "violation",
                                                                    min_out;
    auto *mini = app.add_subcommand("minimize", "shrink a violating test case");
    auto *mc = mini->add_option("-c,--config", min_config, "campaign configuration");
    auto *mr = mini->add_option("--report", min_report, "campaign report");
    mini->add_option("--violation", min_violation, "violation id <round>-<k>");
    auto *mf = mini->add_option("--fixture", min_fixture, "leak reproducer id");
    mini->add_option("--predicate", predicate, "what must keep holding")
        ->check(CLI::IsMember({"violation", "speculation"}));
    mini->add_option("--out", min_out, "write the program here instead of stdout");
    mc->excludes(mr);
    mf->excludes(mc);
    mf->excludes(mr);

    std::string rep_report, rep_violation, rep_fixture, disable;
    auto *repro = app.add_subcommand("reproduce", "re-run a reported violation");
    auto *rr = repro->add_option("--report", rep_report, "campaign report");
    repro->add_option("--violation", rep_violation, "violation id <round>-<k>");
    auto *rf = repro->add_option("--fixture", rep_fixture, "leak reproducer id");
    repro->add_option("--disable", disable, "DUT clause to switch off for the re-run");
    rf->excludes(rr);

    std::string stats_report;
    bool stats_json = false;
    auto *stats = app.add_subcommand("stats", "metrics of a campaign report");
    stats->add_option("--report", stats_report, "campaign report")->required();
    stats->add_flag("--json", stats_json, "print the summary document");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? kClean : kError;
    }

    try {
        if (*fuzz)
            return cmd_fuzz(config_path, n, i, seed, out_path, jobs);
        if (*mini) {
            if (min_fixture.empty() && min_config.empty() && min_report.empty())
                throw CLI::ValidationError("minimize", "one of -c, --report or --fixture is required");
            return cmd_minimize(min_config, min_report, min_violation, min_fixture, predicate,
                                min_out);
        }
        if (*repro)
            return cmd_reproduce(rep_report, rep_violation, rep_fixture, disable);
        if (*stats)
            return cmd_stats(stats_report, stats_json);
    } catch (const CLI::Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kError;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kError;
    }
    return kError;
}
