// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "pathforget/attribution.hpp"
#include "pathforget/experiment.hpp"
#include "pathforget/scenario.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pathforget {

struct LayerAggregate {
    std::string name;
    ParamKind kind = ParamKind::Weight;
    std::size_t count = 0;
    double sum = 0.0;     // signed Σ_i ΔL_i
    double abs_sum = 0.0; // |sum|
    double mean = 0.0;    // sum / count
};

/// Position of a block in the network's layer order (conv1 first, heads last,
/// weight before bias). Unknown names sort after all known ones.
std::size_t layer_rank(std::string_view block_name);

/// One aggregate per block in layer order, independent of storage order.
std::vector<LayerAggregate> aggregate(const AttributionReport& report);

/// Everything recorded about one seeded attribution run.
struct RunRecord {
    std::string scenario;
    std::uint64_t seed = 0;
    ScenarioSpec spec;
    TrainConfig train;
    AttributionReport report;
    double accuracy_start = 0.0;
    double accuracy_end = 0.0;
};

struct MeanStd {
    double mean = 0.0;
    double std = 0.0; // sample deviation, n - 1 denominator; 0 for a single run
};

/// Two-pass mean and sample standard deviation.
MeanStd mean_std(std::span<const double> values);

struct BlockStats {
    std::string name;
    ParamKind kind = ParamKind::Weight;
    std::size_t count = 0;
    MeanStd sum;          // signed block sums
    MeanStd abs_sum;      // |block sum|
    MeanStd per_element;  // signed sum / count
    MeanStd abs_per_element;
};

struct MultiRunStats {
    std::string scenario;
    std::size_t run_count = 0;
    std::vector<BlockStats> blocks; // layer order
    double exact_delta_mean = 0.0;
    double relative_error_mean = 0.0;
};

/// Per-block statistics across runs. Throws ConsistencyError if the runs do
/// not share a block inventory.
MultiRunStats multi_run(std::span<const AttributionReport> reports, std::string scenario);
/// Same, additionally requiring every record to come from one scenario.
MultiRunStats multi_run(std::span<const RunRecord> runs);

inline constexpr int kReportSchemaVersion = 1;

std::string to_csv(const MultiRunStats& stats);
std::string to_json_text(const MultiRunStats& stats);

/// Serialized run collection. Contains no timestamps or paths, so identical
/// runs give identical bytes.
std::string report_json(std::span<const RunRecord> runs);
std::vector<RunRecord> parse_report_json(std::string_view text);

enum class FigureMode { Sum, MeanPerElement };

std::string_view to_string(FigureMode mode);
/// Accepts sum, mean.
FigureMode parse_figure_mode(std::string_view text);

/// Grouped bar chart of block magnitudes with ±1 std error bars; weights and
/// biases are drawn in separate panels, each with its own scale.
std::string render_svg(const MultiRunStats& stats, FigureMode mode);

/// Writes `content` to `path` through a temporary sibling. Throws IoError.
void write_text(const std::filesystem::path& path, std::string_view content);
std::string read_text(const std::filesystem::path& path);

} // namespace pathforget
