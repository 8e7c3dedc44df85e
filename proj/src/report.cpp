// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#include "pathforget/report.hpp"

#include "pathforget/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace pathforget {

using ojson = nlohmann::ordered_json;

std::size_t layer_rank(std::string_view block_name) {
    constexpr std::size_t unknown = std::numeric_limits<std::size_t>::max() / 2;
    const std::size_t dot = block_name.find('.');
    if (dot == std::string_view::npos) {
        return unknown;
    }
    const std::string_view layer = block_name.substr(0, dot);
    const std::string_view part = block_name.substr(dot + 1);
    if (part != "weight" && part != "bias") {
        return unknown;
    }
    std::size_t base = 0;
    if (layer == "conv1") {
        base = 0;
    } else if (layer == "conv2") {
        base = 1;
    } else if (layer == "dense1") {
        base = 2;
    } else if (layer == "dense2") {
        base = 3;
    } else if (layer.starts_with("head") && layer.size() > 4) {
        std::size_t head = 0;
        const auto* first = layer.data() + 4;
        const auto* last = layer.data() + layer.size();
        const auto [end, ec] = std::from_chars(first, last, head);
        if (ec != std::errc() || end != last) {
            return unknown;
        }
        base = 4 + head;
    } else {
        return unknown;
    }
    return 2 * base + (part == "bias" ? 1 : 0);
}

std::vector<LayerAggregate> aggregate(const AttributionReport& report) {
    std::vector<LayerAggregate> out;
    out.reserve(report.blocks.size());
    for (const BlockAttribution& b : report.blocks) {
        const std::size_t n = b.info.size();
        out.push_back({b.info.name, b.info.kind, n, b.sum, std::abs(b.sum),
                       n == 0 ? 0.0 : b.sum / static_cast<double>(n)});
    }
    std::stable_sort(out.begin(), out.end(), [](const LayerAggregate& a, const LayerAggregate& b) {
        return layer_rank(a.name) < layer_rank(b.name);
    });
    return out;
}

MeanStd mean_std(std::span<const double> values) {
    if (values.empty()) {
        throw ValidationError("statistics need at least one value");
    }
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) {
        mean += v;
    }
    mean /= n;
    if (values.size() == 1) {
        return {mean, 0.0};
    }
    double ss = 0.0;
    for (double v : values) {
        ss += (v - mean) * (v - mean);
    }
    return {mean, std::sqrt(ss / (n - 1.0))};
}

MultiRunStats multi_run(std::span<const AttributionReport> reports, std::string scenario) {
    if (reports.empty()) {
        throw ValidationError("multi-run statistics need at least one report");
    }
    std::vector<std::vector<LayerAggregate>> per_run;
    per_run.reserve(reports.size());
    for (const AttributionReport& r : reports) {
        per_run.push_back(aggregate(r));
    }
    const std::vector<LayerAggregate>& reference = per_run.front();
    for (std::size_t r = 1; r < per_run.size(); ++r) {
        const auto& run = per_run[r];
        bool same = run.size() == reference.size();
        for (std::size_t b = 0; same && b < run.size(); ++b) {
            same = run[b].name == reference[b].name && run[b].kind == reference[b].kind &&
                   run[b].count == reference[b].count;
        }
        if (!same) {
            throw ConsistencyError("run " + std::to_string(r) + " has a different block inventory than run 0");
        }
    }

    MultiRunStats stats;
    stats.scenario = std::move(scenario);
    stats.run_count = reports.size();
    std::vector<double> sums(reports.size());
    std::vector<double> abs_sums(reports.size());
    std::vector<double> means(reports.size());
    std::vector<double> abs_means(reports.size());
    for (std::size_t b = 0; b < reference.size(); ++b) {
        for (std::size_t r = 0; r < per_run.size(); ++r) {
            sums[r] = per_run[r][b].sum;
            abs_sums[r] = per_run[r][b].abs_sum;
            means[r] = per_run[r][b].mean;
            abs_means[r] = std::abs(per_run[r][b].mean);
        }
        stats.blocks.push_back({reference[b].name, reference[b].kind, reference[b].count, mean_std(sums),
                                mean_std(abs_sums), mean_std(means), mean_std(abs_means)});
    }
    std::vector<double> exact;
    std::vector<double> rel;
    for (const AttributionReport& r : reports) {
        exact.push_back(r.exact_delta);
        rel.push_back(r.relative_error);
    }
    stats.exact_delta_mean = mean_std(exact).mean;
    stats.relative_error_mean = mean_std(rel).mean;
    return stats;
}

MultiRunStats multi_run(std::span<const RunRecord> runs) {
    if (runs.empty()) {
        throw ValidationError("multi-run statistics need at least one run");
    }
    std::vector<AttributionReport> reports;
    for (const RunRecord& run : runs) {
        if (run.scenario != runs.front().scenario) {
            throw ConsistencyError("cannot combine scenarios '" + runs.front().scenario + "' and '" + run.scenario +
                                   "'");
        }
        reports.push_back(run.report);
    }
    return multi_run(reports, runs.front().scenario);
}

namespace {

std::string number(double v) {
    if (!std::isfinite(v)) {
        return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    }
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

const char* const kCsvColumns[] = {"scenario",         "run_count",       "block",         "kind",
                                   "n_elements",       "sum_mean",        "sum_std",       "per_element_mean",
                                   "per_element_std",  "exact_dL_mean",   "approx_err_mean"};

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t parse_hex64(const std::string& text) {
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v, 16);
    if (ec != std::errc() || end != text.data() + text.size()) {
        throw ValidationError("bad fingerprint '" + text + "'");
    }
    return v;
}

double as_double(const ojson& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

ojson run_to_json(const RunRecord& run) {
    const AttributionReport& r = run.report;
    ojson groups = ojson::array();
    for (const ClassGroup& g : run.spec.class_groups) {
        groups.push_back(g);
    }
    ojson blocks = ojson::array();
    for (const BlockAttribution& b : r.blocks) {
        blocks.push_back({
            {"name", b.info.name},
            {"kind", to_string(b.info.kind)},
            {"head", b.info.head_id ? ojson(*b.info.head_id) : ojson(nullptr)},
            {"shape", b.info.shape},
            {"n_elements", b.info.size()},
            {"sum", b.sum},
            {"l1", b.abs_sum},
            {"path_l1", b.path_l1},
        });
    }
    return {
        {"scenario", run.scenario},
        {"seed", run.seed},
        {"scenario_spec",
         {{"kind", to_string(run.spec.kind)},
          {"permutation_seed", run.spec.permutation_seed},
          {"class_groups", groups},
          {"train_limit", run.spec.train_limit ? ojson(*run.spec.train_limit) : ojson(nullptr)}}},
        {"train",
         {{"epochs", run.train.epochs},
          {"batch_size", run.train.batch_size},
          {"lr", run.train.adam.lr},
          {"beta1", run.train.adam.beta1},
          {"beta2", run.train.adam.beta2},
          {"epsilon", run.train.adam.epsilon},
          {"window", to_string(run.train.window)}}},
        {"path_integral",
         {{"quadrature", to_string(r.config.quadrature)},
          {"substeps", r.config.substeps},
          {"eval_set_size", r.config.eval_set_size},
          {"eval_set_seed", r.config.eval_set_seed}}},
        {"loss_start", r.loss_start},
        {"loss_end", r.loss_end},
        {"exact_delta", r.exact_delta},
        {"approx_delta", r.approx_delta},
        {"relative_error", r.relative_error},
        {"steps", r.steps},
        {"gradient_evaluations", r.gradient_evaluations},
        {"eval_set_samples", r.eval_set_size},
        {"eval_set_fingerprint", hex64(r.fingerprint)},
        {"accuracy_start", run.accuracy_start},
        {"accuracy_end", run.accuracy_end},
        {"blocks", blocks},
    };
}

RunRecord run_from_json(const ojson& j) {
    RunRecord run;
    run.scenario = j.at("scenario").get<std::string>();
    run.seed = j.at("seed").get<std::uint64_t>();

    const ojson& spec = j.at("scenario_spec");
    run.spec.kind = parse_scenario(spec.at("kind").get<std::string>());
    run.spec.permutation_seed = spec.at("permutation_seed").get<std::uint64_t>();
    run.spec.class_groups.clear();
    for (const ojson& g : spec.at("class_groups")) {
        run.spec.class_groups.push_back(g.get<ClassGroup>());
    }
    if (!spec.at("train_limit").is_null()) {
        run.spec.train_limit = spec.at("train_limit").get<std::size_t>();
    }

    const ojson& train = j.at("train");
    run.train.epochs = train.at("epochs").get<std::size_t>();
    run.train.batch_size = train.at("batch_size").get<std::size_t>();
    run.train.adam.lr = train.at("lr").get<double>();
    run.train.adam.beta1 = train.at("beta1").get<double>();
    run.train.adam.beta2 = train.at("beta2").get<double>();
    run.train.adam.epsilon = train.at("epsilon").get<double>();
    run.train.window = parse_window(train.at("window").get<std::string>());

    AttributionReport& r = run.report;
    const ojson& path = j.at("path_integral");
    r.config.quadrature = parse_quadrature(path.at("quadrature").get<std::string>());
    r.config.substeps = path.at("substeps").get<std::size_t>();
    r.config.eval_set_size = path.at("eval_set_size").get<std::size_t>();
    r.config.eval_set_seed = path.at("eval_set_seed").get<std::uint64_t>();
    r.loss_start = as_double(j.at("loss_start"));
    r.loss_end = as_double(j.at("loss_end"));
    r.exact_delta = as_double(j.at("exact_delta"));
    r.approx_delta = as_double(j.at("approx_delta"));
    r.relative_error = as_double(j.at("relative_error"));
    r.steps = j.at("steps").get<std::size_t>();
    r.gradient_evaluations = j.at("gradient_evaluations").get<std::size_t>();
    r.eval_set_size = j.at("eval_set_samples").get<std::size_t>();
    r.fingerprint = parse_hex64(j.at("eval_set_fingerprint").get<std::string>());
    run.accuracy_start = as_double(j.at("accuracy_start"));
    run.accuracy_end = as_double(j.at("accuracy_end"));

    for (const ojson& b : j.at("blocks")) {
        BlockAttribution block;
        block.info.name = b.at("name").get<std::string>();
        block.info.kind = parse_param_kind(b.at("kind").get<std::string>());
        if (!b.at("head").is_null()) {
            block.info.head_id = b.at("head").get<std::size_t>();
        }
        block.info.shape = b.at("shape").get<Shape>();
        if (block.info.size() != b.at("n_elements").get<std::size_t>()) {
            throw ConsistencyError("block " + block.info.name + " shape disagrees with its element count");
        }
        block.sum = as_double(b.at("sum"));
        block.abs_sum = as_double(b.at("l1"));
        block.path_l1 = as_double(b.at("path_l1"));
        r.blocks.push_back(std::move(block));
    }
    return run;
}

} // namespace

std::string to_csv(const MultiRunStats& stats) {
    std::string out;
    for (std::size_t c = 0; c < std::size(kCsvColumns); ++c) {
        out += c == 0 ? "" : ",";
        out += kCsvColumns[c];
    }
    out += '\n';
    for (const BlockStats& b : stats.blocks) {
        out += stats.scenario + ',' + std::to_string(stats.run_count) + ',' + b.name + ',' +
               std::string(to_string(b.kind)) + ',' + std::to_string(b.count) + ',' + number(b.sum.mean) + ',' +
               number(b.sum.std) + ',' + number(b.per_element.mean) + ',' + number(b.per_element.std) + ',' +
               number(stats.exact_delta_mean) + ',' + number(stats.relative_error_mean) + '\n';
    }
    return out;
}

std::string to_json_text(const MultiRunStats& stats) {
    ojson rows = ojson::array();
    for (const BlockStats& b : stats.blocks) {
        rows.push_back({
            {"scenario", stats.scenario},
            {"run_count", stats.run_count},
            {"block", b.name},
            {"kind", to_string(b.kind)},
            {"n_elements", b.count},
            {"sum_mean", b.sum.mean},
            {"sum_std", b.sum.std},
            {"per_element_mean", b.per_element.mean},
            {"per_element_std", b.per_element.std},
            {"exact_dL_mean", stats.exact_delta_mean},
            {"approx_err_mean", stats.relative_error_mean},
        });
    }
    return ojson{{"schema_version", kReportSchemaVersion}, {"rows", rows}}.dump(2) + '\n';
}

std::string report_json(std::span<const RunRecord> runs) {
    ojson list = ojson::array();
    for (const RunRecord& run : runs) {
        list.push_back(run_to_json(run));
    }
    return ojson{{"schema_version", kReportSchemaVersion}, {"runs", list}}.dump(2) + '\n';
}

std::vector<RunRecord> parse_report_json(std::string_view text) {
    ojson doc;
    try {
        doc = ojson::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("report is not valid JSON: ") + e.what(), e.byte);
    }
    try {
        const int version = doc.at("schema_version").get<int>();
        if (version != kReportSchemaVersion) {
            throw ValidationError("unsupported report schema version " + std::to_string(version));
        }
        std::vector<RunRecord> runs;
        for (const ojson& j : doc.at("runs")) {
            runs.push_back(run_from_json(j));
        }
        return runs;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed report: ") + e.what());
    }
}

std::string_view to_string(FigureMode mode) { return mode == FigureMode::Sum ? "sum" : "mean"; }

FigureMode parse_figure_mode(std::string_view text) {
    if (text == "sum") {
        return FigureMode::Sum;
    }
    if (text == "mean") {
        return FigureMode::MeanPerElement;
    }
    throw ValidationError("unknown figure mode '" + std::string(text) + "' (expected sum or mean)");
}

namespace {

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

std::string px(double v) { return fmt("%.2f", v); }

std::string escape_xml(std::string_view text) {
    std::string out;
    for (char c : text) {
        switch (c) {
        case '&':
            out += "&amp;";
            break;
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '"':
            out += "&quot;";
            break;
        default:
            out += c;
        }
    }
    return out;
}

const char* bar_colour(std::string_view name) {
    if (name.starts_with("conv")) {
        return "#4c72b0";
    }
    if (name.starts_with("dense")) {
        return "#55a868";
    }
    return "#c44e52";
}

struct Bar {
    const BlockStats* block;
    MeanStd value;
};

constexpr double kBarWidth = 36.0;
constexpr double kBarGap = 18.0;
constexpr double kPanelGap = 90.0;
constexpr double kLeft = 80.0;
constexpr double kTop = 50.0;
constexpr double kPlotHeight = 260.0;
constexpr double kBottom = 90.0;

double panel_width(std::size_t bars) { return static_cast<double>(bars) * (kBarWidth + kBarGap) + kBarGap; }

void draw_panel(std::ostringstream& svg, const std::vector<Bar>& bars, double x0, const char* title) {
    if (bars.empty()) {
        return;
    }
    const double width = panel_width(bars.size());
    const double base = kTop + kPlotHeight;
    double top = 0.0;
    for (const Bar& b : bars) {
        top = std::max(top, b.value.mean + b.value.std);
    }
    if (!(top > 0.0) || !std::isfinite(top)) {
        top = 1.0;
    }
    top *= 1.1;
    const auto y_of = [&](double v) { return base - std::clamp(v / top, 0.0, 1.0) * kPlotHeight; };

    svg << "<g class=\"panel\" data-panel=\"" << title << "\">\n";
    svg << "<text x=\"" << px(x0 + width / 2) << "\" y=\"" << px(kTop - 12)
        << "\" text-anchor=\"middle\" font-size=\"13\">" << title << "</text>\n";
    for (int t = 0; t <= 4; ++t) {
        const double v = top * t / 4.0;
        const double y = y_of(v);
        svg << "<line class=\"grid\" x1=\"" << px(x0) << "\" y1=\"" << px(y) << "\" x2=\"" << px(x0 + width)
            << "\" y2=\"" << px(y) << "\" stroke=\"#dddddd\"/>\n";
        svg << "<text x=\"" << px(x0 - 6) << "\" y=\"" << px(y + 4)
            << "\" text-anchor=\"end\" font-size=\"10\">" << fmt("%.3g", v) << "</text>\n";
    }
    svg << "<line class=\"axis\" x1=\"" << px(x0) << "\" y1=\"" << px(kTop) << "\" x2=\"" << px(x0) << "\" y2=\""
        << px(base) << "\" stroke=\"#000000\"/>\n";
    svg << "<line class=\"axis\" x1=\"" << px(x0) << "\" y1=\"" << px(base) << "\" x2=\"" << px(x0 + width)
        << "\" y2=\"" << px(base) << "\" stroke=\"#000000\"/>\n";

    for (std::size_t i = 0; i < bars.size(); ++i) {
        const Bar& b = bars[i];
        const double x = x0 + kBarGap + static_cast<double>(i) * (kBarWidth + kBarGap);
        const double y = y_of(b.value.mean);
        const double cx = x + kBarWidth / 2;
        const std::string name = escape_xml(b.block->name);
        svg << "<rect class=\"bar\" data-block=\"" << name << "\" data-value=\"" << number(b.value.mean)
            << "\" data-std=\"" << number(b.value.std) << "\" x=\"" << px(x) << "\" y=\"" << px(y)
            << "\" width=\"" << px(kBarWidth) << "\" height=\"" << px(base - y) << "\" fill=\""
            << bar_colour(b.block->name) << "\"/>\n";
        const double hi = y_of(b.value.mean + b.value.std);
        const double lo = y_of(b.value.mean - b.value.std);
        svg << "<g class=\"error\" data-block=\"" << name << "\" stroke=\"#000000\">"
            << "<line x1=\"" << px(cx) << "\" y1=\"" << px(lo) << "\" x2=\"" << px(cx) << "\" y2=\"" << px(hi)
            << "\"/><line x1=\"" << px(cx - 6) << "\" y1=\"" << px(hi) << "\" x2=\"" << px(cx + 6) << "\" y2=\""
            << px(hi) << "\"/><line x1=\"" << px(cx - 6) << "\" y1=\"" << px(lo) << "\" x2=\"" << px(cx + 6)
            << "\" y2=\"" << px(lo) << "\"/></g>\n";
        svg << "<text x=\"" << px(cx) << "\" y=\"" << px(base + 14) << "\" font-size=\"10\" text-anchor=\"end\""
            << " transform=\"rotate(-40 " << px(cx) << ' ' << px(base + 14) << ")\">" << name << "</text>\n";
    }
    svg << "</g>\n";
}

} // namespace

std::string render_svg(const MultiRunStats& stats, FigureMode mode) {
    if (stats.blocks.empty()) {
        throw ValidationError("cannot draw a figure without blocks");
    }
    std::vector<Bar> weights;
    std::vector<Bar> biases;
    for (const BlockStats& b : stats.blocks) {
        const MeanStd value = mode == FigureMode::Sum ? b.abs_sum : b.abs_per_element;
        (b.kind == ParamKind::Weight ? weights : biases).push_back({&b, value});
    }
    const double w_width = weights.empty() ? 0.0 : panel_width(weights.size());
    const double b_width = biases.empty() ? 0.0 : panel_width(biases.size());
    const double gap = weights.empty() || biases.empty() ? 0.0 : kPanelGap;
    const double width = kLeft + w_width + gap + b_width + 30.0;
    const double height = kTop + kPlotHeight + kBottom;

    const std::string quantity = mode == FigureMode::Sum ? "|sum of contributions|" : "|mean contribution per element|";
    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << px(width) << "\" height=\""
        << px(height) << "\" viewBox=\"0 0 " << px(width) << ' ' << px(height) << "\" font-family=\"sans-serif\">\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"" << px(width) << "\" height=\"" << px(height) << "\" fill=\"#ffffff\"/>\n";
    svg << "<text x=\"" << px(width / 2) << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">"
        << escape_xml(stats.scenario) << ": " << escape_xml(quantity) << ", n=" << stats.run_count
        << ", error bars 1 std</text>\n";
    draw_panel(svg, weights, kLeft, "weights");
    draw_panel(svg, biases, kLeft + w_width + gap, "biases");
    svg << "</svg>\n";
    return svg.str();
}

void write_text(const std::filesystem::path& path, std::string_view content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot open for writing", tmp);
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            throw IoError("write failed", tmp);
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot move output into place", path);
    }
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open for reading", path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) {
        throw IoError("read failed", path);
    }
    return buf.str();
}

} // namespace pathforget
