#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "geh/commands.hpp"
#include "geh/features.hpp"
#include "geh/gbt.hpp"
#include "geh/metrics.hpp"
#include "geh/stats.hpp"
#include "geh/synth.hpp"
#include "geh/vcg.hpp"

namespace py = pybind11;
using namespace geh;

namespace {

using Triple = std::tuple<int, int, int>;

vcg::Vcg make_vcg(std::vector<double> x, std::vector<double> y, std::vector<double> z, double fs, Triple qrs,
                  Triple t) {
    if (x.size() != y.size() || x.size() != z.size()) throw Error(ErrorKind::LengthMismatch, "x, y, z differ in length");
    vcg::Vcg v;
    v.x = std::move(x);
    v.y = std::move(y);
    v.z = std::move(z);
    v.sampling_rate_hz = fs;
    v.fiducials.qrs = {std::get<0>(qrs), std::get<1>(qrs), std::get<2>(qrs)};
    v.fiducials.t = {std::get<0>(t), std::get<1>(t), std::get<2>(t)};
    return v;
}

py::dict geh_dict(const features::GehMeasures& g) {
    py::dict d;
    const auto values = g.values();
    for (std::size_t i = 0; i < features::kGehCount; ++i) d[py::str(std::string(features::kGehNames[i]))] = values[i];
    return d;
}

std::vector<double> flatten(const std::vector<std::vector<double>>& rows, std::size_t& cols) {
    cols = rows.empty() ? 0 : rows.front().size();
    std::vector<double> out;
    out.reserve(rows.size() * cols);
    for (const auto& r : rows) {
        if (r.size() != cols) throw Error(ErrorKind::WidthMismatch, "ragged feature rows");
        out.insert(out.end(), r.begin(), r.end());
    }
    return out;
}

app::RunConfig config_from(const std::filesystem::path& path, std::optional<std::filesystem::path> out) {
    auto c = app::load_run_config(path);
    if (out) c.output_dir = *out;
    return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "GEH feature extraction and boosted-tree triage models";

    py::register_exception<Error>(m, "GehError", PyExc_RuntimeError);

    m.def("version", [] { return std::string(app::kVersion); });

    m.def("kors_transform",
          [](const std::vector<std::vector<double>>& leads) {
              if (leads.size() != ecg::kLeadCount) throw Error(ErrorKind::MissingLead, "expected 12 leads");
              ecg::MedianBeat beat;
              for (std::size_t l = 0; l < ecg::kLeadCount; ++l) beat.leads[l] = leads[l];
              const auto v = vcg::kors_transform(beat);
              return py::make_tuple(v.x, v.y, v.z);
          },
          py::arg("leads"), "Twelve leads (I..V6 order, mV) to x, y, z.");

    m.def("compute_geh",
          [](std::vector<double> x, std::vector<double> y, std::vector<double> z, double fs, Triple qrs, Triple t) {
              return geh_dict(features::compute_geh(make_vcg(std::move(x), std::move(y), std::move(z), fs, qrs, t)));
          },
          py::arg("x"), py::arg("y"), py::arg("z"), py::arg("sampling_rate_hz"), py::arg("qrs"), py::arg("t"),
          "Nine GEH measures from a baseline-corrected VCG beat; qrs and t are (onset, peak, offset).");

    m.def("spatial_angle",
          [](std::array<double, 3> u, std::array<double, 3> v) {
              return features::spatial_angle({u[0], u[1], u[2]}, {v[0], v[1], v[2]});
          },
          py::arg("u"), py::arg("v"));

    m.def("roc_auc", [](std::vector<int> labels, std::vector<double> scores) {
        return metrics::roc_auc(labels, scores).auc;
    });
    m.def("average_precision", [](std::vector<int> labels, std::vector<double> scores) {
        return metrics::pr_aucpr(labels, scores).average_precision;
    });
    m.def("choose_threshold",
          [](std::vector<int> labels, std::vector<double> scores, double min_sensitivity) {
              const auto t = metrics::choose_threshold(labels, scores, min_sensitivity);
              py::dict d;
              d["threshold"] = t.threshold;
              d["orientation"] = std::string(metrics::to_string(t.orientation));
              d["sensitivity"] = t.sensitivity;
              d["specificity"] = t.specificity;
              d["f2"] = metrics::f2(t.confusion);
              d["tp"] = t.confusion.tp;
              d["fp"] = t.confusion.fp;
              d["tn"] = t.confusion.tn;
              d["fn"] = t.confusion.fn;
              return d;
          },
          py::arg("labels"), py::arg("scores"), py::arg("min_sensitivity") = 0.9);
    m.def("f2", [](std::int64_t tp, std::int64_t fp, std::int64_t tn, std::int64_t fn) {
        return metrics::f2({tp, fp, tn, fn});
    }, py::arg("tp"), py::arg("fp"), py::arg("tn"), py::arg("fn"));

    m.def("mann_whitney", [](std::vector<double> a, std::vector<double> b) {
        const auto r = stats::mann_whitney(a, b);
        return py::make_tuple(r.u, r.p);
    });
    m.def("chi_square_2x2", [](std::array<std::array<std::int64_t, 2>, 2> table) {
        const auto r = stats::chi_square_2x2(table);
        return py::make_tuple(r.statistic, r.p);
    });

    m.def("fit",
          [](const std::vector<std::vector<double>>& rows, std::vector<int> labels, std::vector<std::string> names,
             double eta, int num_rounds, int max_depth) {
              std::size_t cols = 0;
              const auto values = flatten(rows, cols);
              gbt::TrainConfig cfg;
              cfg.eta = eta;
              cfg.num_rounds = num_rounds;
              cfg.max_depth = max_depth;
              return gbt::serialize(gbt::fit({values, cols, labels}, std::move(names), cfg));
          },
          py::arg("rows"), py::arg("labels"), py::arg("names"), py::arg("eta") = 0.3, py::arg("num_rounds") = 100,
          py::arg("max_depth") = 6, "Trains a boosted-tree classifier and returns it as JSON text.");
    m.def("predict",
          [](const std::string& model_json, const std::vector<std::vector<double>>& rows) {
              std::size_t cols = 0;
              const auto values = flatten(rows, cols);
              return gbt::predict(gbt::deserialize(model_json), values, cols);
          },
          py::arg("model_json"), py::arg("rows"));

    m.def("synth",
          [](const std::filesystem::path& out_dir, std::size_t n_patients, std::uint64_t seed, std::size_t zero_t) {
              synth::SynthConfig cfg;
              cfg.n_patients = n_patients;
              cfg.seed = seed;
              cfg.zero_t_patients = zero_t;
              synth::write_cohort_files(synth::generate(cfg), cfg, out_dir);
              return out_dir / "run.cfg";
          },
          py::arg("out_dir"), py::arg("n_patients") = 300, py::arg("seed") = 1, py::arg("zero_t_patients") = 0,
          "Writes a synthetic cohort and returns the path of its run configuration.");

    m.def("extract", [](const std::filesystem::path& config, std::optional<std::filesystem::path> out) {
        app::cmd_extract(config_from(config, out));
    }, py::arg("config"), py::arg("output_dir") = py::none());
    m.def("table_one", [](const std::filesystem::path& config, std::optional<std::filesystem::path> out) {
        app::cmd_table_one(config_from(config, out));
    }, py::arg("config"), py::arg("output_dir") = py::none());
    m.def("train_eval",
          [](const std::filesystem::path& config, std::optional<std::filesystem::path> out,
             std::optional<std::vector<std::string>> specs, std::optional<std::uint64_t> seed,
             std::optional<std::size_t> n_instances) {
              auto c = config_from(config, out);
              if (specs) {
                  c.specs.clear();
                  for (const auto& s : *specs) c.specs.push_back(cohort::parse_model_label(s));
              }
              if (seed) c.master_seed = *seed;
              if (n_instances) c.n_instances = *n_instances;
              app::cmd_train_eval(c);
              return c.output_dir / "summary.csv";
          },
          py::arg("config"), py::arg("output_dir") = py::none(), py::arg("specs") = py::none(),
          py::arg("seed") = py::none(), py::arg("n_instances") = py::none(),
          "Runs the train/evaluate stage and returns the path of summary.csv.");
}
