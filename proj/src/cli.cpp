#include "p2plearn/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "p2plearn/market.hpp"
#include "p2plearn/pipeline.hpp"
#include "p2plearn/scenario.hpp"
#include "p2plearn/scenario_io.hpp"

namespace p2plearn {

namespace {

namespace fs = std::filesystem;

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

std::string hour_file(int hour) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "hour_%02d.json", hour);
    return buf;
}

struct GenerateArgs {
    std::uint64_t seed = 0;
    std::string out;
    bool day = false;
};

struct RunArgs {
    std::string scenario;
    std::uint64_t seed = 0;
    std::optional<double> k;
    double alpha = 0.8;
    double tol = 1e-9;
    double clear_tol = 1e-12;
    int max_iter = 10'000;
    std::string strategy = "average";
    std::string out;
};

struct ClearArgs {
    std::string scenario;
    std::string params;
    bool oracle = false;
};

struct AmplifyArgs {
    std::string report;
    double factor = 16.0;
};

struct DayArgs {
    std::string series;
    std::uint64_t seed = 0;
    std::string out;
};

PipelineConfig pipeline_config(const RunArgs& a) {
    PipelineConfig cfg;
    cfg.consensus.alpha_default = a.alpha;
    cfg.consensus.tol = a.tol;
    cfg.clearing_tol = a.clear_tol;
    cfg.consensus.max_iter = a.max_iter;
    cfg.k = a.k;
    cfg.strategy = a.strategy == "minmax" ? NegotiationStrategy::MinMax : NegotiationStrategy::Average;
    return cfg;
}

void print_violations(std::ostream& out, const std::vector<Violation>& violations) {
    for (const auto& v : violations) out << "  violation: prosumer " << v.id << " " << to_string(v.tag) << "\n";
}

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
    if (!a.day) {
        const auto scenario = generate_case_study(a.seed);
        save_scenario(a.out, scenario);
        out << "wrote " << a.out << " (" << scenario.size() << " prosumers)\n";
        return kExitOk;
    }
    fs::create_directories(a.out);
    const auto hours = generate_day_series(a.seed);
    for (std::size_t h = 0; h < hours.size(); ++h) {
        save_scenario(fs::path(a.out) / hour_file(static_cast<int>(h)), hours[h]);
    }
    out << "wrote " << hours.size() << " hourly scenarios to " << a.out << "\n";
    return kExitOk;
}

int cmd_run(const RunArgs& a, std::ostream& out) {
    const auto scenario = load_scenario(a.scenario);
    const auto report = run_algorithm1(scenario, pipeline_config(a), a.seed);
    const fs::path dir(a.out);
    fs::create_directories(dir);
    save_report(dir / "report.json", report);
    save_trace(dir / "negotiation_trace.csv", report.negotiation_trace);
    save_trace(dir / "clearing_trace.csv", report.clearing_trace);
    out << "negotiated interval: [" << num(report.negotiated.lower) << ", " << num(report.negotiated.upper) << "]\n"
        << "xi = " << num(report.xi) << ", k = " << num(report.k.k) << " (k_min = " << num(report.k_min) << ")\n"
        << "selection: " << to_string(report.rule) << "\n"
        << "lambda* = " << num(report.clearing.lambda_star) << " (analytic " << num(report.analytic_price) << ")\n"
        << "feasible: " << (report.clearing.feasible ? "true" : "false") << "\n";
    print_violations(out, report.clearing.violations);
    out << "wrote " << (dir / "report.json").string() << "\n";
    return kExitOk;
}

int cmd_clear(const ClearArgs& a, std::ostream& out) {
    const auto scenario = load_scenario(a.scenario);
    const auto params = load_params(a.params);
    if (params.size() != scenario.size()) {
        throw Error(ErrorCode::SchemaError, "params file lists " + std::to_string(params.size()) +
                                                " prosumers, scenario has " + std::to_string(scenario.size()));
    }
    const auto bounds = scenario.bounds();
    const auto roles = scenario.roles();
    const auto result = clear_market(params, bounds, roles);
    out << "lambda* = " << num(result.lambda_star) << "\n";
    for (std::size_t i = 0; i < result.trades.size(); ++i) {
        out << "  prosumer " << i << " (" << to_string(roles[i]) << "): " << num(result.trades[i]) << " kW\n";
    }
    out << "feasible: " << (result.feasible ? "true" : "false") << "\n";
    print_violations(out, result.violations);
    if (a.oracle) {
        const auto oracle = qp_oracle(params, bounds, roles);
        double diff = std::abs(oracle.clearing.lambda_star - result.lambda_star);
        for (std::size_t i = 0; i < result.trades.size(); ++i) {
            diff = std::max(diff, std::abs(oracle.clearing.trades[i] - result.trades[i]));
        }
        out << "oracle lambda* = " << num(oracle.clearing.lambda_star) << " after " << oracle.iterations
            << " iterations\n"
            << "max |analytic - oracle| = " << num(diff) << "\n";
    }
    return kExitOk;
}

int cmd_amplify(const AmplifyArgs& a, std::ostream& out) {
    const auto report = load_report(a.report);
    const auto rec = amplification_experiment(report, a.factor);
    out << "factor " << num(a.factor) << ": lambda* " << num(rec.before.lambda_star) << " -> "
        << num(rec.after.lambda_star) << "\n"
        << "energy sold: " << num(rec.sold_before()) << " -> " << num(rec.sold_after()) << " kW\n"
        << "feasible after: " << (rec.after.feasible ? "true" : "false") << "\n";
    print_violations(out, rec.after.violations);
    if (rec.not_increased.empty()) {
        out << "every |trade| increased\n";
    } else {
        out << rec.not_increased.size() << " prosumer(s) did not increase |trade|:";
        for (auto id : rec.not_increased) out << " " << id;
        out << "\n";
    }
    return kExitOk;
}

int cmd_day(const DayArgs& a, const RunArgs& run, std::ostream& out) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(a.series)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    if (files.empty()) throw Error(ErrorCode::IoError, "no scenario files in " + a.series);
    std::sort(files.begin(), files.end());
    std::vector<MarketScenario> hours;
    for (const auto& f : files) hours.push_back(load_scenario(f));

    const auto day = run_day(hours, pipeline_config(run), a.seed);
    nlohmann::json summary = nlohmann::json::array();
    for (const auto& h : day) {
        nlohmann::json row = {{"hour", h.hour}, {"file", files[static_cast<std::size_t>(h.hour)].filename().string()}};
        out << "hour " << h.hour << ": ";
        switch (h.status) {
            case HourStatus::Completed:
                out << "lambda* = " << num(h.report->clearing.lambda_star)
                    << ", feasible = " << (h.report->clearing.feasible ? "true" : "false") << "\n";
                row["status"] = "completed";
                row["lambda_star"] = h.report->clearing.lambda_star;
                row["feasible"] = h.report->clearing.feasible;
                break;
            case HourStatus::Skipped:
                out << "skipped (" << h.message << ")\n";
                row["status"] = "skipped";
                row["message"] = h.message;
                break;
            case HourStatus::Failed:
                out << "failed (" << h.message << ")\n";
                row["status"] = "failed";
                row["message"] = h.message;
                break;
        }
        summary.push_back(std::move(row));
    }
    const double total = daily_traded_energy(day);
    out << "daily traded energy: " << num(total) << " kWh\n";
    if (!a.out.empty()) {
        const nlohmann::json doc = {{"format_version", kFormatVersion},
                                    {"seed", a.seed},
                                    {"hours", std::move(summary)},
                                    {"traded_energy_kwh", total}};
        write_file_atomic(a.out, doc.dump(2) + "\n");
    }
    return kExitOk;
}

void add_consensus_options(CLI::App* cmd, RunArgs& a) {
    cmd->add_option("--alpha", a.alpha, "Noise decay of the masked consensus, in (0, 1)")->capture_default_str();
    cmd->add_option("--tol", a.tol, "Stopping tolerance of the negotiation rounds")->capture_default_str();
    cmd->add_option("--clear-tol", a.clear_tol, "Stopping tolerance of the masked clearing rounds")
        ->capture_default_str();
    cmd->add_option("--max-iter", a.max_iter, "Consensus round budget")->capture_default_str();
    cmd->add_option("--strategy", a.strategy, "Price band negotiation")
        ->check(CLI::IsMember({"average", "minmax"}))
        ->capture_default_str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Peer-to-peer energy market learning simulator"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Write a synthetic case-study scenario");
    generate->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
    generate->add_option("--out", gen.out, "Output file (directory with --day)")->required();
    generate->add_flag("--day", gen.day, "Write 24 hourly scenarios instead of one");

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Learn cost parameters and clear one market");
    run_cmd->add_option("--scenario", run.scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--seed", run.seed, "Run seed")->capture_default_str();
    run_cmd->add_option("--k", run.k, "Use this k instead of negotiating one");
    run_cmd->add_option("--out", run.out, "Output directory")->required();
    add_consensus_options(run_cmd, run);

    ClearArgs clr;
    auto* clear = app.add_subcommand("clear", "Clear a market for given cost parameters");
    clear->add_option("--scenario", clr.scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
    clear->add_option("--params", clr.params, "Cost parameter JSON")->required()->check(CLI::ExistingFile);
    clear->add_flag("--oracle", clr.oracle, "Cross-check against the numerical QP solver");

    AmplifyArgs amp;
    auto* amplify = app.add_subcommand("amplify", "Shrink curvatures toward their lower ends and re-clear");
    amplify->add_option("--report", amp.report, "Report JSON from `run`")->required()->check(CLI::ExistingFile);
    amplify->add_option("--factor", amp.factor, "Shrink factor (>= 1)")->capture_default_str();

    DayArgs day;
    RunArgs day_run;
    auto* day_cmd = app.add_subcommand("day", "Run every hourly scenario in a directory");
    day_cmd->add_option("--series", day.series, "Directory of scenario JSON files")
        ->required()
        ->check(CLI::ExistingDirectory);
    day_cmd->add_option("--seed", day.seed, "Run seed, shared by all hours")->capture_default_str();
    day_cmd->add_option("--out", day.out, "Optional summary JSON");
    add_consensus_options(day_cmd, day_run);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        if (const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front()) {
            err << sub->help();
        }
        return kExitInvalid;
    }

    try {
        if (generate->parsed()) return cmd_generate(gen, out);
        if (run_cmd->parsed()) return cmd_run(run, out);
        if (clear->parsed()) return cmd_clear(clr, out);
        if (amplify->parsed()) return cmd_amplify(amp, out);
        if (day_cmd->parsed()) return cmd_day(day, day_run, out);
    } catch (const Error& e) {
        err << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
        return e.code() == ErrorCode::NoConvergence ? kExitNoConvergence : kExitInvalid;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    }
    return kExitInvalid;
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args, std::cout, std::cerr);
}

}  // namespace p2plearn
