// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#include "pathforget/cli.hpp"

#include "pathforget/error.hpp"
#include "pathforget/experiment.hpp"
#include "pathforget/fetch.hpp"
#include "pathforget/report.hpp"
#include "pathforget/scenario.hpp"
#include "pathforget/snapshot.hpp"
#include "pathforget/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <iostream>

namespace pathforget {

namespace {

struct RunOptions {
    std::string scenario = "icl";
    std::uint64_t seed = 0;
    std::size_t runs = 1;
    std::size_t epochs = 10;
    std::size_t batch_size = 128;
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::string quadrature = "trapezoid";
    std::size_t substeps = 1;
    std::size_t eval_size = 1024;
    std::uint64_t eval_seed = 0;
    std::string window = "full";
    std::uint64_t permutation_seed = 0;
    std::size_t train_limit = 0;
    std::string data_dir;
    std::string out = "results";
    bool quiet = false;
    bool save_model = false;
};

struct ReportOptions {
    std::string in;
    std::string format = "csv";
    std::string mode = "sum";
    std::string out = "-";
};

struct VerifyOptions {
    bool gradients = false;
    bool quadratic = false;
    bool convergence = false;
    std::uint64_t seed = 0;
};

struct FetchOptions {
    std::string source = "all";
    std::string mirror;
    std::string cache_dir;
    bool offline = false;
};

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

int do_run(const RunOptions& o, const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    ScenarioSpec spec;
    spec.kind = parse_scenario(o.scenario);
    spec.permutation_seed = o.permutation_seed;
    if (o.train_limit > 0) {
        spec.train_limit = o.train_limit;
    }
    TrainConfig train;
    train.epochs = o.epochs;
    train.batch_size = o.batch_size;
    train.adam = {o.lr, o.beta1, o.beta2, o.epsilon};
    train.window = parse_window(o.window);
    PathIntegralConfig path;
    path.quadrature = parse_quadrature(o.quadrature);
    path.substeps = o.substeps;
    path.eval_set_size = o.eval_size;
    path.eval_set_seed = o.eval_seed;
    if (o.runs == 0) {
        throw ValidationError("--runs must be positive");
    }
    spec.validate();
    train.validate();
    path.validate();

    const std::filesystem::path data_dir = o.data_dir.empty() ? default_cache_dir() : std::filesystem::path(o.data_dir);
    const std::filesystem::path out_dir = o.out;
    std::filesystem::create_directories(out_dir);
    const std::string started = utc_now();
    const TaskSequence sequence = build_sequence(spec, data_dir);

    std::vector<RunRecord> records;
    nlohmann::ordered_json timings = nlohmann::ordered_json::array();
    nlohmann::ordered_json snapshots = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < o.runs; ++r) {
        const std::uint64_t seed = o.seed + r;
        const auto t0 = std::chrono::steady_clock::now();
        const ProgressFn progress = [&](const Progress& p) {
            if (!o.quiet) {
                err << "[run " << r + 1 << "/" << o.runs << " seed " << seed << "] " << sequence.tasks[p.task].name
                    << " epoch " << p.epoch + 1 << "/" << train.epochs << " loss " << p.train_loss << '\n';
            }
        };
        RunResult result = run_with_attribution(sequence, train, path, seed, progress);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!o.quiet) {
            err << "[run " << r + 1 << "/" << o.runs << " seed " << seed << "] exact dL " << result.report.exact_delta
                << " approx " << result.report.approx_delta << " rel err " << result.report.relative_error << '\n';
        }
        if (o.save_model) {
            const auto snap = out_dir / ("model_seed" + std::to_string(seed) + ".pfsnap");
            save_snapshot(result.model, snap);
            snapshots.push_back(snap.string());
        }
        records.push_back({std::string(to_string(spec.kind)), seed, spec, train, std::move(result.report),
                           result.accuracy_start, result.accuracy_end});
        timings.push_back({{"seed", seed}, {"wall_seconds", seconds}});
    }

    const std::filesystem::path report_path = out_dir / "report.json";
    write_text(report_path, report_json(records));

    std::string command = "pathforget";
    for (const std::string& a : args) {
        command += " " + a;
    }
    nlohmann::ordered_json manifest = {
        {"schema_version", kReportSchemaVersion},
        {"command", command},
        {"started_utc", started},
        {"finished_utc", utc_now()},
        {"data_dir", data_dir.string()},
        {"scenario", to_string(spec.kind)},
        {"seeds", nlohmann::ordered_json::array()},
        {"runs", timings},
        {"artifacts", {{"report", report_path.string()}}},
    };
    for (const RunRecord& rec : records) {
        manifest["seeds"].push_back(rec.seed);
    }
    if (o.save_model) {
        manifest["artifacts"]["snapshots"] = snapshots;
    }
    write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
    out << report_path.string() << '\n';
    return 0;
}

int do_report(const ReportOptions& o, std::ostream& out) {
    const std::vector<RunRecord> runs = parse_report_json(read_text(o.in));
    const MultiRunStats stats = multi_run(runs);
    std::string text;
    if (o.format == "csv") {
        text = to_csv(stats);
    } else if (o.format == "json") {
        text = to_json_text(stats);
    } else if (o.format == "svg") {
        text = render_svg(stats, parse_figure_mode(o.mode));
    } else {
        throw ValidationError("unknown format '" + o.format + "' (expected csv, json or svg)");
    }
    if (o.out == "-") {
        out << text;
    } else {
        write_text(o.out, text);
    }
    return 0;
}

int do_verify(VerifyOptions o, std::ostream& out) {
    if (!o.gradients && !o.quadratic && !o.convergence) {
        o.gradients = o.quadratic = o.convergence = true;
    }
    std::vector<CheckResult> results;
    if (o.gradients) {
        results.push_back(check_gradients(o.seed));
    }
    if (o.quadratic) {
        results.push_back(check_quadratic(o.seed));
    }
    if (o.convergence) {
        results.push_back(check_quadrature_convergence(o.seed));
    }
    bool ok = true;
    for (const CheckResult& r : results) {
        out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
        ok = ok && r.passed;
    }
    return ok ? 0 : 1;
}

int do_fetch(const FetchOptions& o, std::ostream& out) {
    std::vector<Source> sources;
    if (o.source == "all") {
        sources = {Source::Mnist, Source::FashionMnist};
    } else {
        sources = {parse_source(o.source)};
    }
    if (!o.mirror.empty() && sources.size() > 1) {
        throw UsageError("--mirror needs a single --source");
    }
    const std::filesystem::path cache = o.cache_dir.empty() ? default_cache_dir() : std::filesystem::path(o.cache_dir);
    for (Source s : sources) {
        const std::string mirror = o.offline ? "" : (o.mirror.empty() ? default_mirror(s) : o.mirror);
        const DatasetFiles files = fetch_dataset(s, mirror, cache);
        out << to_string(s) << ": " << files.train_images.parent_path().string() << " (" << files.downloaded
            << " downloaded)\n";
    }
    return 0;
}

} // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Attribute catastrophic forgetting to individual parameters", "pathforget"};
    app.require_subcommand(1);

    RunOptions run;
    CLI::App* run_cmd = app.add_subcommand("run", "Train task A then task B, integrating the task-A loss change");
    run_cmd->add_option("--scenario", run.scenario, "itl, idl-permute, idl-invert or icl")
        ->check(CLI::IsMember({"itl", "idl-permute", "idl-invert", "icl"}));
    run_cmd->add_option("--seed", run.seed, "Seed of the first run; run r uses seed + r");
    run_cmd->add_option("--runs", run.runs, "Number of seeded runs");
    run_cmd->add_option("--epochs", run.epochs, "Epochs per task");
    run_cmd->add_option("--batch-size", run.batch_size, "Minibatch size");
    run_cmd->add_option("--lr", run.lr, "Adam learning rate");
    run_cmd->add_option("--beta1", run.beta1, "Adam first-moment decay");
    run_cmd->add_option("--beta2", run.beta2, "Adam second-moment decay");
    run_cmd->add_option("--epsilon", run.epsilon, "Adam epsilon");
    run_cmd->add_option("--quadrature", run.quadrature, "left or trapezoid")
        ->check(CLI::IsMember({"left", "left_riemann", "trapezoid"}));
    run_cmd->add_option("--substeps", run.substeps, "Quadrature subintervals per optimizer step");
    run_cmd->add_option("--eval-size", run.eval_size, "Task-A test examples defining the tracked loss");
    run_cmd->add_option("--eval-seed", run.eval_seed, "Seed of the evaluation subset draw");
    run_cmd->add_option("--window", run.window, "full or first-epoch")
        ->check(CLI::IsMember({"full", "first-epoch"}));
    run_cmd->add_option("--permutation-seed", run.permutation_seed, "Pixel permutation seed for idl-permute");
    run_cmd->add_option("--train-limit", run.train_limit, "Keep only the first N training examples per task");
    run_cmd->add_option("--data-dir", run.data_dir, "Dataset cache (default: $PATHFORGET_DATA_DIR)");
    run_cmd->add_option("--out", run.out, "Output directory for report.json and manifest.json");
    run_cmd->add_flag("--quiet", run.quiet, "Suppress progress output");
    run_cmd->add_flag("--save-model", run.save_model, "Write the final parameters of each run as a snapshot");

    ReportOptions report;
    CLI::App* report_cmd = app.add_subcommand("report", "Summarize a report.json across runs");
    report_cmd->add_option("--in", report.in, "report.json written by run")->required();
    report_cmd->add_option("--format", report.format, "csv, json or svg")->check(CLI::IsMember({"csv", "json", "svg"}));
    report_cmd->add_option("--mode", report.mode, "Figure quantity: sum or mean")
        ->check(CLI::IsMember({"sum", "mean"}));
    report_cmd->add_option("--out", report.out, "Output file, - for stdout");

    VerifyOptions verify;
    CLI::App* verify_cmd = app.add_subcommand("verify", "Self-checks that need no datasets");
    verify_cmd->add_flag("--gradients", verify.gradients, "Backprop against finite differences");
    verify_cmd->add_flag("--quadratic-oracle", verify.quadratic, "Attribution on a quadratic with known answer");
    verify_cmd->add_flag("--quadrature-convergence", verify.convergence, "Error shrinks as substeps double");
    verify_cmd->add_option("--seed", verify.seed, "Seed for the random problems");

    FetchOptions fetch;
    CLI::App* fetch_cmd = app.add_subcommand("fetch", "Download and cache MNIST and FashionMNIST");
    fetch_cmd->add_option("--source", fetch.source, "mnist, fashion_mnist or all")
        ->check(CLI::IsMember({"mnist", "fashion_mnist", "all"}));
    fetch_cmd->add_option("--mirror", fetch.mirror, "Base URL holding the .gz files");
    fetch_cmd->add_option("--cache-dir", fetch.cache_dir, "Cache directory (default: $PATHFORGET_DATA_DIR)");
    fetch_cmd->add_flag("--offline", fetch.offline, "Only check the cache");

    std::vector<const char*> argv{"pathforget"};
    for (const std::string& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (run_cmd->parsed()) {
            return do_run(run, args, out, err);
        }
        if (report_cmd->parsed()) {
            return do_report(report, out);
        }
        if (verify_cmd->parsed()) {
            return do_verify(verify, out);
        }
        return do_fetch(fetch, out);
    } catch (const std::exception& e) {
        err << "pathforget: error: " << e.what() << '\n';
        return 1;
    }
}

int cli_main(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) {
        args.emplace_back(argv[i]);
    }
    return cli_main(args, std::cout, std::cerr);
}

} // namespace pathforget
