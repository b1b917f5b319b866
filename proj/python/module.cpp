// Python bindings for the SQDM simulator core. Grids convert to/from numpy
// arrays of shape (height, width).

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sqdm/config.hpp"
#include "sqdm/esc.hpp"
#include "sqdm/feedforward.hpp"
#include "sqdm/imaging.hpp"
#include "sqdm/matrix_io.hpp"
#include "sqdm/plant.hpp"
#include "sqdm/rng.hpp"
#include "sqdm/runner.hpp"
#include "sqdm/samplegen.hpp"
#include "sqdm/spectrum.hpp"
#include "sqdm/stc.hpp"

namespace py = pybind11;
using namespace sqdm;

namespace {

py::array_t<double> grid_to_array(const Grid& g) {
    py::array_t<double> arr({g.height, g.width});
    auto r = arr.mutable_unchecked<2>();
    for (int iy = 0; iy < g.height; ++iy)
        for (int ix = 0; ix < g.width; ++ix) r(iy, ix) = g.at(ix, iy);
    return arr;
}

Grid array_to_grid(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
    Grid g(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)));
    auto r = arr.unchecked<2>();
    for (int iy = 0; iy < g.height; ++iy)
        for (int ix = 0; ix < g.width; ++ix) g.at(ix, iy) = r(iy, ix);
    return g;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "closed-loop scanning quantum dot microscopy simulator";

    py::enum_<DipSelector>(m, "DipSelector")
        .value("Negative", DipSelector::Negative)
        .value("Positive", DipSelector::Positive);

    py::class_<SpectrumParams>(m, "SpectrumParams")
        .def(py::init<>())
        .def_readwrite("p1", &SpectrumParams::p1)
        .def_readwrite("p2", &SpectrumParams::p2)
        .def_readwrite("p3", &SpectrumParams::p3)
        .def_readwrite("d_neg", &SpectrumParams::d_neg)
        .def_readwrite("d_pos", &SpectrumParams::d_pos)
        .def_readwrite("V_neg", &SpectrumParams::V_neg)
        .def_readwrite("V_pos", &SpectrumParams::V_pos)
        .def_readwrite("w_neg", &SpectrumParams::w_neg)
        .def_readwrite("w_pos", &SpectrumParams::w_pos)
        .def_readwrite("a1", &SpectrumParams::a1)
        .def_readwrite("a2", &SpectrumParams::a2)
        .def_readwrite("a3", &SpectrumParams::a3)
        .def("validate", &SpectrumParams::validate);

    m.def("eval_spectrum", &eval_spectrum, py::arg("params"), py::arg("v_b"));
    m.def("eval_derivative", &eval_derivative, py::arg("params"), py::arg("v_b"));
    m.def("true_dip_minimum", &true_dip_minimum, py::arg("params"), py::arg("dip"));
    m.def(
        "fit_spectrum",
        [](const std::vector<std::pair<double, double>>& samples,
           const SpectrumParams& init, int max_iterations) {
            FitResult r = fit_spectrum(samples, init, max_iterations);
            return py::make_tuple(r.params, r.converged, r.iterations, r.residual_norm);
        },
        py::arg("samples"), py::arg("init"), py::arg("max_iterations") = 200,
        "Returns (params, converged, iterations, residual_norm).");

    py::class_<EscParams>(m, "EscParams")
        .def(py::init<>())
        .def_readwrite("a_d", &EscParams::a_d)
        .def_readwrite("omega_d", &EscParams::omega_d)
        .def_readwrite("omega_L", &EscParams::omega_L)
        .def_readwrite("omega_H", &EscParams::omega_H)
        .def_readwrite("k", &EscParams::k)
        .def_readwrite("dip", &EscParams::dip);

    m.def("esc_defaults", &esc_defaults, py::arg("dip"), py::arg("omega_pll") = 10.0);
    m.def("phase_compensation", &phase_compensation, py::arg("omega_d"),
          py::arg("omega_pll"), py::arg("omega_H"));
    m.def("compensated_gain", &compensated_gain, py::arg("k"), py::arg("omega_d"),
          py::arg("omega_pll"), py::arg("omega_H"));
    m.def("validate_esc", &validate_esc, py::arg("params"), py::arg("spectrum"),
          py::arg("omega_pll"));

    py::class_<StcParams>(m, "StcParams")
        .def(py::init<>())
        .def_readwrite("delta_f_ref", &StcParams::delta_f_ref)
        .def_readwrite("gain", &StcParams::gain)
        .def_readwrite("dip", &StcParams::dip)
        .def_readwrite("rho", &StcParams::rho);

    m.def("stc_defaults", &stc_defaults, py::arg("dip"));
    m.def(
        "pick_reference",
        [](const SpectrumParams& p, DipSelector dip, double rho) {
            ReferencePoint r = pick_reference(p, dip, rho);
            return py::make_tuple(r.delta_f_ref, r.v_b_at_ref);
        },
        py::arg("params"), py::arg("dip"), py::arg("rho"),
        "Returns (delta_f_ref, v_b_at_ref).");
    m.def("systematic_error", &systematic_error, py::arg("params"), py::arg("dip"),
          py::arg("delta_f_ref"));

    m.def(
        "compute_phi_star",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& v_neg,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& v_pos,
           double v_neg0, double delta_v0) {
            PotentialImage img =
                compute_phi_star(array_to_grid(v_neg), array_to_grid(v_pos), v_neg0, delta_v0);
            return grid_to_array(img.phi);
        },
        py::arg("v_neg_map"), py::arg("v_pos_map"), py::arg("v_neg0"), py::arg("delta_v0"));

    m.def(
        "score",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& image,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& reference) {
            ScoreResult r = score(array_to_grid(image), array_to_grid(reference));
            return py::make_tuple(r.mse, r.rmse_mv, r.psnr_db, grid_to_array(r.error_map));
        },
        py::arg("image"), py::arg("reference"),
        "Returns (mse_v2, rmse_mv, psnr_db, error_map).");

    py::class_<RunConfig>(m, "RunConfig")
        .def(py::init<>())
        .def_readwrite("maps_dir", &RunConfig::maps_dir)
        .def_readwrite("spectrum", &RunConfig::spectrum)
        .def_readwrite("depth_scale", &RunConfig::depth_scale)
        .def_readwrite("width_scale", &RunConfig::width_scale)
        .def_readwrite("omega_pll", &RunConfig::omega_pll)
        .def_readwrite("sigma_n", &RunConfig::sigma_n)
        .def_readwrite("controller", &RunConfig::controller)
        .def_readwrite("dip", &RunConfig::dip)
        .def_readwrite("ff_enabled", &RunConfig::ff_enabled)
        .def_readwrite("ff_after_lines", &RunConfig::ff_after_lines)
        .def_readwrite("ff_window", &RunConfig::ff_window)
        .def_property(
            "seed", [](const RunConfig& c) { return c.seed.value_or(0); },
            [](RunConfig& c, std::uint64_t s) { c.seed = s; })
        .def_property(
            "scan_time_total", [](const RunConfig& c) { return c.scan.scan_time_total; },
            [](RunConfig& c, double v) { c.scan.scan_time_total = v; })
        .def_property(
            "lines", [](const RunConfig& c) { return c.scan.lines; },
            [](RunConfig& c, int v) { c.scan.lines = v; })
        .def_property(
            "pixels_per_line", [](const RunConfig& c) { return c.scan.pixels_per_line; },
            [](RunConfig& c, int v) { c.scan.pixels_per_line = v; })
        .def_property(
            "ts", [](const RunConfig& c) { return c.scan.ts; },
            [](RunConfig& c, double v) { c.scan.ts = v; })
        .def_property(
            "sample_grid",
            [](const RunConfig& c) {
                return py::make_tuple(c.sample.grid_width, c.sample.grid_height);
            },
            [](RunConfig& c, std::pair<int, int> wh) {
                c.sample.grid_width = wh.first;
                c.sample.grid_height = wh.second;
            })
        .def_property(
            "sample_random_blobs", [](const RunConfig& c) { return c.sample.random_blobs; },
            [](RunConfig& c, int v) { c.sample.random_blobs = v; })
        .def_property(
            "sample_total_variation_mv",
            [](const RunConfig& c) { return c.sample.total_variation_mv; },
            [](RunConfig& c, double v) { c.sample.total_variation_mv = v; });

    m.def("load_run_config", &load_run_config, py::arg("path"));

    m.def(
        "run_scan",
        [](const RunConfig& cfg) {
            GroundTruth truth = make_ground_truth(cfg);
            ScanResult r = run_scan(cfg, truth);
            py::dict out;
            out["controller"] = r.controller;
            out["dip"] = std::string(to_string(r.dip));
            out["v_init"] = r.v_init;
            out["delta_f_ref"] = r.delta_f_ref;
            out["dip_lost"] = r.dip_lost;
            out["fault_samples"] = r.fault_samples;
            out["samples"] = r.record.size();
            out["map"] = grid_to_array(r.map.values);
            out["truth_phi"] = grid_to_array(truth.phi);
            out["truth_v_neg"] = grid_to_array(truth.maps.v_neg);
            out["truth_v_pos"] = grid_to_array(truth.maps.v_pos);
            return out;
        },
        py::arg("config"), "Run one closed-loop scan; returns a result dict.");

    m.def(
        "run_scan_pair",
        [](const RunConfig& cfg, std::uint64_t master_seed) {
            GroundTruth truth = make_ground_truth(cfg);
            PairResult pr = run_scan_pair(cfg, truth, master_seed);
            py::dict out;
            out["completed"] = pr.completed;
            out["faults"] = pr.neg.fault_samples + pr.pos.fault_samples;
            if (pr.completed) {
                out["phi"] = grid_to_array(pr.image.phi);
                out["mse_v2"] = pr.scores.mse;
                out["rmse_mv"] = pr.scores.rmse_mv;
                out["psnr_db"] = pr.scores.psnr_db;
            }
            out["truth_phi"] = grid_to_array(truth.phi);
            return out;
        },
        py::arg("config"), py::arg("master_seed"),
        "Scan both dips, reconstruct and score; returns a result dict.");

    m.attr("__version__") = "0.1.0";
}
