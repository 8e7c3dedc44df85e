// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#include "pathforget/attribution.hpp"
#include "pathforget/cli.hpp"
#include "pathforget/error.hpp"
#include "pathforget/model.hpp"
#include "pathforget/report.hpp"
#include "pathforget/snapshot.hpp"
#include "pathforget/verify.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace pathforget;

namespace {

py::array_t<double> to_array(const Tensor& t) {
    py::array_t<double> out(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
    std::copy(t.data().begin(), t.data().end(), out.mutable_data());
    return out;
}

py::dict check_dict(const CheckResult& r) {
    py::dict d;
    d["name"] = r.name;
    d["passed"] = r.passed;
    d["value"] = r.value;
    d["threshold"] = r.threshold;
    d["detail"] = r.detail;
    return d;
}

py::dict block_dict(const BlockInfo& b) {
    py::dict d;
    d["name"] = b.name;
    d["kind"] = std::string(to_string(b.kind));
    d["shape"] = b.shape;
    d["head"] = b.head_id ? py::object(py::int_(*b.head_id)) : py::object(py::none());
    return d;
}

py::list stats_rows(const MultiRunStats& s) {
    py::list rows;
    for (const BlockStats& b : s.blocks) {
        py::dict d;
        d["block"] = b.name;
        d["kind"] = std::string(to_string(b.kind));
        d["n_elements"] = b.count;
        d["sum_mean"] = b.sum.mean;
        d["sum_std"] = b.sum.std;
        d["abs_sum_mean"] = b.abs_sum.mean;
        d["abs_sum_std"] = b.abs_sum.std;
        d["per_element_mean"] = b.per_element.mean;
        d["per_element_std"] = b.per_element.std;
        rows.append(d);
    }
    return rows;
}

MultiRunStats stats_from_text(const std::string& report_text) {
    const std::vector<RunRecord> runs = parse_report_json(report_text);
    return multi_run(runs);
}

py::dict attribute_quadratic(std::vector<double> curvature, const std::vector<std::vector<double>>& path,
                             const std::string& quadrature, std::size_t substeps) {
    if (path.size() < 2) {
        throw ValidationError("path needs at least two points");
    }
    const QuadraticField field(std::move(curvature));
    const std::size_t n = field.curvature().size();
    const auto point = [&](std::size_t k) {
        if (path[k].size() != n) {
            throw DimensionError("path point " + std::to_string(k) + " has " + std::to_string(path[k].size()) +
                                 " coordinates, expected " + std::to_string(n));
        }
        return Tensor({n}, path[k]);
    };
    const PathIntegralConfig config{parse_quadrature(quadrature), substeps, n, 0};
    AttributionLedger ledger = begin_tracking({field.block()}, std::vector<Tensor>{point(0)}, field, config);
    for (std::size_t k = 1; k < path.size(); ++k) {
        const Tensor before = point(k - 1);
        const Tensor after = point(k);
        Tensor delta({n});
        for (std::size_t i = 0; i < n; ++i) {
            delta[i] = after[i] - before[i];
        }
        record_step(ledger, StepDelta{{before}, {delta}}, field);
    }
    const AttributionReport r = finalize(ledger, std::vector<Tensor>{point(path.size() - 1)}, field);
    py::dict d;
    d["contributions"] = to_array(r.blocks[0].contributions);
    d["approx_delta"] = r.approx_delta;
    d["exact_delta"] = r.exact_delta;
    d["relative_error"] = r.relative_error;
    d["gradient_evaluations"] = r.gradient_evaluations;
    return d;
}

py::tuple run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli_main(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
}

py::dict snapshot_arrays(const std::string& path) {
    const Model model = load_snapshot(path);
    py::dict d;
    for (std::size_t i = 0; i < model.blocks().size(); ++i) {
        d[py::str(model.blocks()[i].name)] = to_array(model.parameters()[i]);
    }
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Per-parameter attribution of forgetting along a training trajectory";

    static py::exception<Error> base(m, "PathforgetError", PyExc_RuntimeError);
    py::register_exception<FetchError>(m, "FetchError", base.ptr());
    py::register_exception<IntegrityError>(m, "IntegrityError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());
    py::register_exception<FormatError>(m, "FormatError", base.ptr());
    py::register_exception<UsageError>(m, "UsageError", base.ptr());
    py::register_exception<ConsistencyError>(m, "ConsistencyError", base.ptr());
    py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

    m.def("cli", &run_cli, py::arg("args"), "Run the command-line tool; returns (exit_code, stdout, stderr)");

    m.def(
        "check_gradients",
        [](std::uint64_t seed, std::size_t batch, std::size_t coordinates) {
            return check_dict(check_gradients(seed, batch, coordinates));
        },
        py::arg("seed") = 0, py::arg("batch") = 8, py::arg("coordinates") = 200);
    m.def(
        "check_quadratic", [](std::uint64_t seed) { return check_dict(check_quadratic(seed)); }, py::arg("seed") = 0);
    m.def(
        "check_quadrature_convergence",
        [](std::uint64_t seed, std::vector<std::size_t> substeps) {
            return check_dict(check_quadrature_convergence(seed, std::move(substeps)));
        },
        py::arg("seed") = 0, py::arg("substeps") = std::vector<std::size_t>{1, 2, 4, 8});

    m.def(
        "quadrature_nodes",
        [](const std::string& quadrature, std::size_t substeps) {
            std::vector<std::pair<double, double>> out;
            for (const QuadratureNode& n : quadrature_nodes(parse_quadrature(quadrature), substeps)) {
                out.emplace_back(n.t, n.weight);
            }
            return out;
        },
        py::arg("quadrature") = "trapezoid", py::arg("substeps") = 1, "List of (t, weight) pairs");
    m.def("attribute_quadratic", &attribute_quadratic, py::arg("curvature"), py::arg("path"),
          py::arg("quadrature") = "trapezoid", py::arg("substeps") = 1,
          "Attribute the change of 0.5 * sum(a * theta**2) along a piecewise-linear path");

    m.def(
        "block_layout",
        [](std::size_t head_count) {
            py::list out;
            for (const BlockInfo& b : block_layout(ModelConfig::standard(head_count))) {
                out.append(block_dict(b));
            }
            return out;
        },
        py::arg("head_count") = 1);
    m.def(
        "parameter_count",
        [](std::size_t head_count) { return Model::build(ModelConfig::standard(head_count), 0).parameter_count(); },
        py::arg("head_count") = 1);
    m.def("load_snapshot", &snapshot_arrays, py::arg("path"), "Parameter arrays of a saved model, keyed by block");

    m.def(
        "mean_std",
        [](const std::vector<double>& values) {
            const MeanStd s = mean_std(values);
            return py::make_tuple(s.mean, s.std);
        },
        py::arg("values"));
    m.def(
        "summarize", [](const std::string& text) { return stats_rows(stats_from_text(text)); }, py::arg("report_json"),
        "Per-block statistics across the runs of a report.json document");
    m.def(
        "to_csv", [](const std::string& text) { return to_csv(stats_from_text(text)); }, py::arg("report_json"));
    m.def(
        "render_svg",
        [](const std::string& text, const std::string& mode) {
            return render_svg(stats_from_text(text), parse_figure_mode(mode));
        },
        py::arg("report_json"), py::arg("mode") = "sum");

    m.attr("REPORT_SCHEMA_VERSION") = kReportSchemaVersion;
    m.attr("SNAPSHOT_VERSION") = kSnapshotVersion;
}
