#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "coldwarm/pipeline.hpp"

namespace py = pybind11;
using namespace coldwarm;

namespace {

InteractionLog to_log(const std::vector<std::tuple<std::string, std::string, Timestamp>>& rows) {
    std::vector<RawInteraction> raw;
    raw.reserve(rows.size());
    for (const auto& [u, i, t] : rows) raw.push_back({u, i, t, 1.0});
    return make_log(raw);
}

py::dict stats_dict(const DatasetStats& s) {
    py::dict d;
    d["users"] = s.n_users;
    d["items"] = s.n_items;
    d["interactions"] = s.n_interactions;
    d["density"] = s.density;
    d["avg_user_interactions"] = s.avg_user_interactions;
    d["avg_item_interactions"] = s.avg_item_interactions;
    return d;
}

py::dict report_dict(const ThresholdReport& r) {
    py::dict d;
    d["threshold"] = r.threshold_n ? py::cast(*r.threshold_n) : py::none();
    d["window"] = py::make_tuple(r.window_start_n, r.window_end_n);
    d["slope"] = r.slope;
    d["verdict"] = to_string(r.verdict);
    d["contrast_flag"] = r.contrast_flag;
    return d;
}

Curve to_curve(const std::map<std::size_t, double>& values) { return Curve::from_map(values); }

class Model {
  public:
    Model(const std::string& kind, const std::vector<std::tuple<std::string, std::string, Timestamp>>& rows,
          const HyperParams& params)
        : log_(to_log(rows)) {
        model_ = make_trainer(parse_model_kind(kind))(build_matrix(log_, MatrixMode::binary), params, {});
    }

    std::vector<std::string> recommend(const std::vector<std::string>& history, std::size_t k,
                                       bool filter_seen) const {
        std::vector<ItemId> ids;
        for (const auto& key : history)
            if (auto id = log_.items->find(key)) ids.push_back(*id);
        std::vector<std::string> out;
        for (auto i : recommend_topk(*model_, ids, k, filter_seen).items) out.push_back(log_.items->key(i));
        return out;
    }

    std::size_t n_items() const { return model_->n_items(); }

  private:
    InteractionLog log_;
    std::unique_ptr<Recommender> model_;
};

RunConfig config_from(const std::string& path, const std::string& output_dir) {
    auto c = load_config(path);
    if (!output_dir.empty()) c.output_dir = output_dir;
    validate(c);
    return c;
}

} // namespace

PYBIND11_MODULE(_coldwarm, m) {
    m.doc() = "Cold-to-warm interaction threshold estimation";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<RunFailure>(m, "RunFailure", PyExc_RuntimeError);

    m.def("dataset_stats", [](const std::vector<std::tuple<std::string, std::string, Timestamp>>& rows) {
        return stats_dict(compute_stats(to_log(rows)));
    }, py::arg("interactions"));

    m.def("pcore_size", [](const std::vector<std::tuple<std::string, std::string, Timestamp>>& rows,
                           std::size_t p) { return stats_dict(compute_stats(pcore_filter(to_log(rows), p))); },
          py::arg("interactions"), py::arg("p"));

    m.def("split_summary",
          [](const std::vector<std::tuple<std::string, std::string, Timestamp>>& rows, double q, double val_fraction,
             std::uint64_t seed) {
              const auto s = split_global_timepoint(to_log(rows), q, val_fraction, seed);
              check_split_invariants(s);
              py::dict d;
              d["gt"] = s.gt;
              d["train_events"] = s.train.events.size();
              d["validation_users"] = s.validation.size();
              d["test_users"] = s.test.size();
              d["cold_start_test_users"] = s.counters.cold_start_test_users;
              return d;
          },
          py::arg("interactions"), py::arg("q") = 0.9, py::arg("val_fraction") = 0.1, py::arg("seed") = 42);

    m.def("window_slopes", [](const std::map<std::size_t, double>& curve, std::size_t w) {
        std::vector<std::tuple<std::size_t, std::size_t, double>> out;
        for (const auto& s : window_slopes(to_curve(curve), w)) out.emplace_back(s.start_n, s.end_n, s.slope);
        return out;
    }, py::arg("curve"), py::arg("window"));

    m.def("detect_threshold",
          [](const std::map<std::size_t, double>& curve, std::size_t window, double flatness, double contrast) {
              return report_dict(detect_threshold(to_curve(curve), {window, flatness, contrast}));
          },
          py::arg("curve"), py::arg("window") = 5, py::arg("flatness_tolerance") = 1e-6,
          py::arg("contrast_multiplier") = 3.0);

    m.def("confidence_interval",
          [](const std::vector<double>& samples, double level, std::size_t resamples, std::uint64_t seed) {
              const auto ci = confidence_interval(samples, level, resamples, seed);
              return py::make_tuple(ci.low, ci.high);
          },
          py::arg("samples"), py::arg("level") = 0.95, py::arg("resamples") = 1000, py::arg("seed") = 0);

    py::class_<Model>(m, "Model")
        .def(py::init<const std::string&, const std::vector<std::tuple<std::string, std::string, Timestamp>>&,
                      const HyperParams&>(),
             py::arg("kind"), py::arg("interactions"), py::arg("params"))
        .def("recommend", &Model::recommend, py::arg("history"), py::arg("k") = 10, py::arg("filter_seen") = true)
        .def_property_readonly("n_items", &Model::n_items);

    // Pipeline commands, same outputs as the CLI.
    m.def("run_stats", [](const std::string& config, const std::string& out) {
        std::ostringstream log;
        return stats_dict(pipeline::cmd_stats(config_from(config, out), log));
    }, py::arg("config"), py::arg("output_dir") = "");
    m.def("run_split", [](const std::string& config, const std::string& out) {
        std::ostringstream log;
        pipeline::cmd_split(config_from(config, out), log);
        return log.str();
    }, py::arg("config"), py::arg("output_dir") = "");
    m.def("run_tune", [](const std::string& config, const std::string& out) {
        std::ostringstream log;
        py::gil_scoped_release release;
        return pipeline::cmd_tune(config_from(config, out), log).chosen;
    }, py::arg("config"), py::arg("output_dir") = "");
    m.def("run_scan_items", [](const std::string& config, const std::string& out) {
        std::ostringstream log;
        py::gil_scoped_release release;
        pipeline::cmd_scan_items(config_from(config, out), log);
        return log.str();
    }, py::arg("config"), py::arg("output_dir") = "");
    m.def("run_scan_users", [](const std::string& config, const std::string& out) {
        std::ostringstream log;
        py::gil_scoped_release release;
        pipeline::cmd_scan_users(config_from(config, out), log);
        return log.str();
    }, py::arg("config"), py::arg("output_dir") = "");
    m.def("run_detect", [](const std::string& config, const std::vector<std::string>& curves, const std::string& out) {
        std::ostringstream log;
        return threshold_records_json(pipeline::cmd_detect(config_from(config, out), curves, "", log));
    }, py::arg("config"), py::arg("curves"), py::arg("output_dir") = "");
}
