// Python bindings for the salseq core library. Grids cross the boundary
// as numpy arrays: saliency maps as float64 (H, W), fixation maps as
// uint8 (H, W), fixation points as integer (N, 2) arrays in (x, y) order.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <vector>

#include "salseq/fixdata.hpp"
#include "salseq/losses.hpp"
#include "salseq/metastack.hpp"
#include "salseq/metrics.hpp"
#include "salseq/recnet.hpp"
#include "salseq/salmap.hpp"
#include "salseq/spatseq.hpp"
#include "salseq/tempseq.hpp"

namespace py = pybind11;
using namespace salseq;

namespace {

py::array_t<double> dense_to_np(const DenseMap& m) {
    py::array_t<double> out({m.height, m.width});
    std::copy(m.values.begin(), m.values.end(), out.mutable_data());
    return out;
}

DenseMap np_to_dense(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw ValidationError("expected a 2-D float array");
    DenseMap m(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    std::copy(a.data(), a.data() + a.size(), m.values.begin());
    return m;
}

py::array_t<std::uint8_t> fix_to_np(const FixationMap& f) {
    py::array_t<std::uint8_t> out({f.height, f.width});
    std::copy(f.grid.begin(), f.grid.end(), out.mutable_data());
    return out;
}

FixationMap np_to_fix(
    const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw ValidationError("expected a 2-D uint8 array");
    FixationMap f(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    const std::uint8_t* src = a.data();
    for (py::ssize_t i = 0; i < a.size(); ++i) {
        if (src[i]) {
            f.grid[static_cast<std::size_t>(i)] = 1;
            ++f.count;
        }
    }
    return f;
}

std::vector<Point2D> np_to_points(
    const py::array_t<long, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2 || a.shape(1) != 2)
        throw ValidationError("expected an (N, 2) integer array of (x, y) points");
    std::vector<Point2D> pts(static_cast<std::size_t>(a.shape(0)));
    auto r = a.unchecked<2>();
    for (py::ssize_t i = 0; i < a.shape(0); ++i)
        pts[static_cast<std::size_t>(i)] = {static_cast<int>(r(i, 0)),
                                            static_cast<int>(r(i, 1))};
    return pts;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Fixation-sequence metadata and saliency evaluation core";

    py::register_exception<ParseError>(m, "ParseError");
    py::register_exception<ValidationError>(m, "ValidationError");

    py::class_<ObserverScanpath>(m, "ObserverScanpath")
        .def(py::init<>())
        .def_readwrite("observer_id", &ObserverScanpath::observer_id)
        .def_property(
            "fixations",
            [](const ObserverScanpath& s) {
                std::vector<std::pair<int, int>> out;
                out.reserve(s.fixations.size());
                for (const auto& p : s.fixations) out.emplace_back(p.x, p.y);
                return out;
            },
            [](ObserverScanpath& s, const std::vector<std::pair<int, int>>& v) {
                s.fixations.clear();
                for (const auto& [x, y] : v) s.fixations.push_back({x, y});
            });

    py::class_<StimulusRecord>(m, "StimulusRecord")
        .def(py::init<>())
        .def_readwrite("stimulus_id", &StimulusRecord::stimulus_id)
        .def_readwrite("width", &StimulusRecord::width)
        .def_readwrite("height", &StimulusRecord::height)
        .def_readwrite("scanpaths", &StimulusRecord::scanpaths)
        .def("total_fixations", &StimulusRecord::total_fixations);

    py::class_<Dataset>(m, "Dataset")
        .def(py::init<>())
        .def_property(
            "scheme", [](const Dataset& d) { return to_string(d.scheme); },
            [](Dataset& d, const std::string& s) { d.scheme = scheme_from_string(s); })
        .def_readwrite("records", &Dataset::records);

    py::class_<MetaStack>(m, "MetaStack")
        .def_readwrite("stimulus_id", &MetaStack::stimulus_id)
        .def_property_readonly("mode",
                               [](const MetaStack& s) { return to_string(s.mode); })
        .def_property_readonly("axis",
                               [](const MetaStack& s) { return to_string(s.axis); })
        .def_property_readonly("maps", [](const MetaStack& s) {
            std::vector<py::array_t<std::uint8_t>> out;
            out.reserve(s.maps.size());
            for (const auto& f : s.maps) out.push_back(fix_to_np(f));
            return out;
        });

    py::class_<GmmModel>(m, "GmmModel")
        .def_readonly("k", &GmmModel::k)
        .def_readonly("weights", &GmmModel::weights)
        .def_readonly("means", &GmmModel::means)
        .def_readonly("covs", &GmmModel::covs)
        .def_readonly("log_likelihood", &GmmModel::log_likelihood);

    // dataset I/O
    m.def("load_dataset", &parse_dataset, py::arg("path"));
    m.def("save_dataset", &write_dataset, py::arg("dataset"), py::arg("path"));
    m.def("dataset_to_json", &dataset_to_json, py::arg("dataset"));
    m.def("dataset_from_json", &dataset_from_json, py::arg("text"));
    m.def(
        "aggregate_map",
        [](const StimulusRecord& r, bool skip_first) {
            return fix_to_np(aggregate_fixation_map(r, skip_first));
        },
        py::arg("record"), py::arg("skip_first") = false);

    // temporal sequencing
    m.def("at_least_histogram",
          [](const Dataset& d) { return at_least_histogram(d).counts; },
          py::arg("dataset"));
    m.def(
        "fit_gaussian_histogram",
        [](const std::vector<long>& counts) {
            GaussianFit f = fit_gaussian_histogram(AtLeastHistogram{counts});
            return std::make_pair(f.mu, f.sigma);
        },
        py::arg("counts"));
    m.def("choose_timesteps", &choose_timesteps, py::arg("mu"), py::arg("sigma"));
    m.def(
        "temporal_maps",
        [](const StimulusRecord& r, const std::string& scheme, int timesteps) {
            TemporalScheme ts = TemporalScheme::defaults(scheme_from_string(scheme));
            if (timesteps > 0) ts.timesteps = timesteps;
            return temporal_maps(r, ts);
        },
        py::arg("record"), py::arg("scheme") = "salicon", py::arg("timesteps") = 0);

    // spatial sequencing
    m.def(
        "fit_gmm",
        [](const py::array_t<long, py::array::c_style | py::array::forcecast>& pts, int k,
           std::uint64_t seed, double reg) { return fit_gmm(np_to_points(pts), k, seed, reg); },
        py::arg("points"), py::arg("k"), py::arg("seed") = 0, py::arg("reg") = 1e-3);
    m.def(
        "hard_assign",
        [](const GmmModel& g,
           const py::array_t<long, py::array::c_style | py::array::forcecast>& pts) {
            return hard_assign(g, np_to_points(pts));
        },
        py::arg("model"), py::arg("points"));
    m.def(
        "wss_curve",
        [](const py::array_t<long, py::array::c_style | py::array::forcecast>& pts, int k_max,
           std::uint64_t seed) { return wss_curve(np_to_points(pts), k_max, seed).distortions; },
        py::arg("points"), py::arg("k_max"), py::arg("seed") = 0);
    m.def(
        "elbow",
        [](const std::vector<double>& distortions) { return elbow(WssCurve{distortions}); },
        py::arg("distortions"));
    m.def("spatial_maps", &spatial_maps, py::arg("record"), py::arg("k"), py::arg("seed") = 0,
          py::arg("reg") = 1e-3);

    // stack transforms
    m.def("to_incremental", &to_incremental, py::arg("stack"));
    m.def("stack_union",
          [](const MetaStack& s) { return fix_to_np(stack_union(s)); }, py::arg("stack"));
    m.def(
        "validate_stack",
        [](const MetaStack& s,
           const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& agg) {
            StackReport rep = validate_stack(s, np_to_fix(agg));
            std::vector<std::tuple<std::string, bool, std::string>> out;
            for (const auto& c : rep.checks) out.emplace_back(c.name, c.passed, c.detail);
            return out;
        },
        py::arg("stack"), py::arg("aggregate"));

    // dense maps
    m.def("blur_sigma", &blur_sigma, py::arg("fc"), py::arg("larger_dim"));
    m.def(
        "blur_fixations",
        [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& fix,
           double fc) { return dense_to_np(blur_fixations(np_to_fix(fix), fc)); },
        py::arg("fixations"), py::arg("fc") = 8.0);
    m.def(
        "center_prior",
        [](int width, int height) { return dense_to_np(center_prior(width, height)); },
        py::arg("width"), py::arg("height"));
    m.def(
        "normalize_sum",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
            return dense_to_np(normalize_sum(np_to_dense(a)));
        },
        py::arg("map"));
    m.def(
        "normalize_range",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
            return dense_to_np(normalize_range(np_to_dense(a)));
        },
        py::arg("map"));
    m.def(
        "zscore",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
            return dense_to_np(zscore(np_to_dense(a)));
        },
        py::arg("map"));

    // metrics
    using DArr = py::array_t<double, py::array::c_style | py::array::forcecast>;
    using BArr = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
    m.def(
        "kl", [](const DArr& p, const DArr& g, double eps) {
            return metrics::kl(np_to_dense(p), np_to_dense(g), eps);
        },
        py::arg("pred"), py::arg("gt"), py::arg("eps") = metrics::kDefaultEps);
    m.def(
        "cc", [](const DArr& a, const DArr& b) { return metrics::cc(np_to_dense(a), np_to_dense(b)); },
        py::arg("a"), py::arg("b"));
    m.def(
        "sim",
        [](const DArr& a, const DArr& b) { return metrics::sim(np_to_dense(a), np_to_dense(b)); },
        py::arg("a"), py::arg("b"));
    m.def(
        "nss",
        [](const DArr& p, const BArr& f) { return metrics::nss(np_to_dense(p), np_to_fix(f)); },
        py::arg("pred"), py::arg("fixations"));
    m.def(
        "auc_judd",
        [](const DArr& p, const BArr& f) {
            return metrics::auc_judd(np_to_dense(p), np_to_fix(f));
        },
        py::arg("pred"), py::arg("fixations"));
    m.def(
        "auc_borji",
        [](const DArr& p, const BArr& f, int n_splits, std::uint64_t seed) {
            return metrics::auc_borji(np_to_dense(p), np_to_fix(f), n_splits, seed);
        },
        py::arg("pred"), py::arg("fixations"), py::arg("n_splits") = 100, py::arg("seed") = 0);
    m.def(
        "sauc",
        [](const DArr& p, const BArr& f, const BArr& other, int n_splits, std::uint64_t seed) {
            return metrics::sauc(np_to_dense(p), np_to_fix(f), np_to_fix(other), n_splits, seed);
        },
        py::arg("pred"), py::arg("fixations"), py::arg("other_fixations"),
        py::arg("n_splits") = 100, py::arg("seed") = 0);
    m.def(
        "info_gain",
        [](const DArr& p, const BArr& f, const DArr& baseline, double eps) {
            return metrics::info_gain(np_to_dense(p), np_to_fix(f), np_to_dense(baseline), eps);
        },
        py::arg("pred"), py::arg("fixations"), py::arg("baseline"),
        py::arg("eps") = metrics::kDefaultEps);

    // scalar losses
    m.def(
        "l_sal",
        [](const DArr& s1, const DArr& s2, const DArr& s3, const DArr& s4, const DArr& gt,
           const BArr& pts, double alpha, double beta, double gamma, double delta) {
            LossWeights w{alpha, beta, gamma, delta, 0.0};
            return losses::l_sal(np_to_dense(s1), np_to_dense(s2), np_to_dense(s3),
                                 np_to_dense(s4), np_to_dense(gt), np_to_fix(pts), w);
        },
        py::arg("s1"), py::arg("s2"), py::arg("s3"), py::arg("s4"), py::arg("gt_gauss"),
        py::arg("gt_points"), py::arg("alpha") = 2.0, py::arg("beta") = 2.0,
        py::arg("gamma") = 5.0, py::arg("delta") = 1.0);
    m.def(
        "l_aux",
        [](const std::vector<DArr>& outputs, const std::vector<BArr>& maps) {
            std::vector<DenseMap> outs;
            std::vector<FixationMap> fixes;
            for (const auto& o : outputs) outs.push_back(np_to_dense(o));
            for (const auto& f : maps) fixes.push_back(np_to_fix(f));
            return losses::l_aux(outs, fixes);
        },
        py::arg("outputs"), py::arg("metadata"));

    // toy network training
    m.def(
        "train_toy",
        [](int steps, double lr, int batch, int side, std::uint64_t seed,
           const std::string& mode) {
            ToyConfig cfg;
            cfg.mode = stack_mode_from_string(mode);
            cfg.seed = seed;
            RecNet net(cfg);
            ToyBatch data = make_toy_batch(cfg, batch, side, seed);
            TrainTrace trace = train_toy(net, data, steps, lr, LossWeights{});
            py::array_t<double> out({static_cast<py::ssize_t>(trace.steps.size()),
                                     static_cast<py::ssize_t>(8)});
            auto r = out.mutable_unchecked<2>();
            for (py::ssize_t i = 0; i < static_cast<py::ssize_t>(trace.steps.size()); ++i) {
                const TrainStep& s = trace.steps[static_cast<std::size_t>(i)];
                r(i, 0) = s.step;
                r(i, 1) = s.kl;
                r(i, 2) = s.cc;
                r(i, 3) = s.sim;
                r(i, 4) = s.nss;
                r(i, 5) = s.aux;
                r(i, 6) = s.sal;
                r(i, 7) = s.total;
            }
            return out;
        },
        py::arg("steps") = 5, py::arg("lr") = 1e-3, py::arg("batch") = 2, py::arg("side") = 32,
        py::arg("seed") = 0, py::arg("mode") = "non-incremental",
        "Train the toy network; returns one row per step: "
        "(step, kl, cc, sim, nss, aux, sal, total).");
}
