#include "sqdm/runner.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "sqdm/esc.hpp"
#include "sqdm/feedforward.hpp"
#include "sqdm/matrix_io.hpp"
#include "sqdm/rng.hpp"
#include "sqdm/samplegen.hpp"
#include "sqdm/stc.hpp"

namespace sqdm {

namespace {
constexpr const char* kCodeVersion = "sqdm-sim 0.1.0";
constexpr double kGridSecondsPerPixel = 3.0;
} // namespace

double grid_speedup(const ScanConfig& scan) {
    double pixels = static_cast<double>(scan.lines) * scan.pixels_per_line;
    double rate = pixels / scan.scan_time_total;
    return rate * kGridSecondsPerPixel;
}

GroundTruth make_ground_truth(const RunConfig& cfg) {
    GroundTruth t;
    if (!cfg.maps_dir.empty()) {
        t.maps = load_dipmaps(cfg.maps_dir);
        t.phi = read_matrix(cfg.maps_dir + "/phi_star.txt");
        if (!t.phi.same_shape(t.maps.v_neg))
            throw std::runtime_error("ground truth phi/map shapes differ in " + cfg.maps_dir);
    } else {
        t.phi = gen_potential(cfg.sample, cfg.seed.value_or(0));
        t.maps = potential_to_dipmaps(t.phi, cfg.sample);
    }
    return t;
}

ScanResult run_scan(const RunConfig& cfg, const GroundTruth& truth) {
    cfg.validate();
    const SpectrumParams spectrum = cfg.scaled_spectrum();
    const std::uint64_t seed = *cfg.seed;
    const ScanConfig& scan = cfg.scan;
    const DipSelector dip = cfg.dip;
    const bool use_esc = cfg.controller == "esc";

    Plant plant(spectrum, truth.maps, scan, cfg.omega_pll, cfg.sigma_n, seed);
    TrajectoryPoint cur =
        trajectory_position(scan, truth.maps.extent_x, truth.maps.extent_y, 0.0);
    SpectrumParams local0 = plant.local_spectrum(cur.x, cur.y);

    ScanResult res;
    res.controller = cfg.controller;
    res.dip = dip;
    res.seed = seed;
    res.derived_alpha = std::exp(-cfg.omega_pll * scan.ts);

    EscParams esc_params = cfg.resolved_esc();
    StcParams stc_params = cfg.resolved_stc();

    std::optional<EscController> esc;
    std::optional<StcController> stc;
    if (use_esc) {
        res.v_init = true_dip_minimum(local0, dip);
        esc.emplace(esc_params, cfg.omega_pll, scan.ts);
        esc->set_integrator(res.v_init);
        res.derived_phase = esc->phase();
        res.derived_gain = esc->gain();
    } else {
        ReferencePoint ref = pick_reference(local0, dip, stc_params.rho);
        stc_params.delta_f_ref = ref.delta_f_ref;
        res.v_init = ref.v_b_at_ref;
        res.delta_f_ref = ref.delta_f_ref;
        stc.emplace(stc_params, scan.ts);
        stc->set_integrator(res.v_init);
        res.derived_gain = stc_params.gain;
    }
    plant.prime(res.v_init);
    double meas = plant.pll_state();

    LineBuffer buf(cfg.ff_window);
    const double dip_window = 3.0 * spectrum.dip_width(dip);
    const long long n_steps = std::llround(scan.scan_time_total / scan.ts);
    const long long fault_latch_steps = std::llround(1.0 / scan.ts);
    long long out_of_window = 0;
    res.record.reserve(static_cast<std::size_t>(n_steps));
    res.fb_error.reserve(static_cast<std::size_t>(n_steps));

    for (long long k = 0; k < n_steps; ++k) {
        const double t = static_cast<double>(k) * scan.ts;
        double v_ff = buf.query(cur.x, cur.direction);

        double v_c, dither = 0.0, fb_err;
        bool ctrl_fault = false;
        if (use_esc) {
            auto out = esc->step(meas, t);
            v_c = out.v_b_c;
            dither = out.dither;
            fb_err = out.xi3;
            ctrl_fault = out.fault;
        } else {
            auto out = stc->step(meas);
            v_c = out.v_b_c;
            fb_err = out.e_f;
            ctrl_fault = out.fault;
        }
        const double v_b = v_c + v_ff;

        auto pout = plant.step(v_b + dither);

        ScanSample row;
        row.t = t;
        row.x = cur.x;
        row.y = cur.y;
        row.line = cur.line;
        row.pixel_x = cur.pixel_x;
        row.direction = cur.direction == ScanDirection::Forward ? 0 : 1;
        row.v_b = v_b;
        row.v_b_c = v_c;
        row.v_b_ff = v_ff;
        row.df_meas = pout.df_meas;

        auto [vn_local, vp_local] = map_lookup(truth.maps, cur.x, cur.y);
        double center = dip == DipSelector::Negative ? vn_local : vp_local;
        if (std::abs(v_b - center) > dip_window) {
            ++out_of_window;
            row.fault |= 1;
        } else {
            out_of_window = 0;
        }
        if (ctrl_fault) row.fault |= 2;
        if (row.fault) ++res.fault_samples;

        res.record.push_back(row);
        res.fb_error.push_back(fb_err);
        buf.record(cur.x, v_b, cur.direction);

        if (out_of_window > fault_latch_steps) {
            res.dip_lost = true;
            res.dip_lost_at = t;
            break;
        }

        if (pout.pos.line != cur.line) {
            buf.advance_line();
            if (cfg.ff_enabled && !buf.enabled() &&
                buf.line_index() >= cfg.ff_after_lines) {
                buf.enable(v_c);
                res.ff_baseline = v_c;
                res.ff_was_enabled = true;
            }
        }
        meas = pout.df_meas;
        cur = pout.pos;
    }

    res.map = assemble_map(res.record, scan);
    return res;
}

ScanResult run_scan(const RunConfig& cfg) {
    return run_scan(cfg, make_ground_truth(cfg));
}

PairResult run_scan_pair(const RunConfig& cfg, const GroundTruth& truth,
                         std::uint64_t master_seed) {
    PairResult pr;
    RunConfig neg_cfg = cfg;
    neg_cfg.dip = DipSelector::Negative;
    neg_cfg.seed = derive_seed(master_seed, 0);
    pr.neg = run_scan(neg_cfg, truth);

    RunConfig pos_cfg = cfg;
    pos_cfg.dip = DipSelector::Positive;
    pos_cfg.seed = derive_seed(master_seed, 1);
    pr.pos = run_scan(pos_cfg, truth);

    pr.completed = !pr.neg.dip_lost && !pr.pos.dip_lost && pr.neg.map.missing.empty() &&
                   pr.pos.map.missing.empty();
    if (pr.completed) {
        double v_neg0 = pr.neg.v_init;
        double delta_v0 = pr.pos.v_init - pr.neg.v_init;
        pr.image = compute_phi_star(pr.neg.map.values, pr.pos.map.values, v_neg0, delta_v0);
        pr.image.extent_x = truth.maps.extent_x;
        pr.image.extent_y = truth.maps.extent_y;
        pr.image.provenance_neg = cfg.controller + "/neg/seed=" + std::to_string(*neg_cfg.seed);
        pr.image.provenance_pos = cfg.controller + "/pos/seed=" + std::to_string(*pos_cfg.seed);
        pr.scores = score(pr.image.phi, truth.phi);
    }
    return pr;
}

RegainResult run_regain(const RunConfig& cfg, std::uint64_t seed, double shift,
                        double shift_time, double total_time, double settle_band,
                        double settle_hold) {
    const SpectrumParams spectrum = cfg.scaled_spectrum();
    const DipSelector dip = cfg.dip;
    const double ts = cfg.scan.ts;

    // static sample: uniform maps at the stock dip positions
    DipMaps maps;
    maps.v_neg = Grid(2, 2, spectrum.V_neg);
    maps.v_pos = Grid(2, 2, spectrum.V_pos);
    maps.extent_x = maps.extent_y = 1.0;
    ScanConfig scan;
    scan.scan_time_total = total_time * 2.0;  // trajectory never consulted past t
    scan.lines = 1;
    scan.pixels_per_line = 1;
    scan.ts = ts;

    Plant plant(spectrum, maps, scan, cfg.omega_pll, cfg.sigma_n, seed);
    RegainResult rr;
    rr.v_min = true_dip_minimum(spectrum, dip);

    EscParams esc_params = cfg.resolved_esc();
    EscController esc(esc_params, cfg.omega_pll, ts);
    esc.set_integrator(rr.v_min);
    plant.prime(rr.v_min);
    double meas = plant.pll_state();

    const long long n_steps = std::llround(total_time / ts);
    const long long hold_steps = std::llround(settle_hold / ts);
    bool shifted = false;
    long long inside = 0;
    for (long long k = 0; k < n_steps; ++k) {
        double t = static_cast<double>(k) * ts;
        if (!shifted && t >= shift_time) {
            esc.set_integrator(esc.integrator() + shift);
            shifted = true;
        }
        auto out = esc.step(meas, t);
        meas = plant.step(out.v_b_c + out.dither).df_meas;
        if (shifted) {
            if (std::abs(out.v_b_c - rr.v_min) <= settle_band) {
                ++inside;
                if (inside >= hold_steps) {
                    rr.settle_time = t - shift_time - settle_hold;
                    return rr;
                }
            } else {
                inside = 0;
            }
        }
    }
    return rr;
}

std::vector<SweepRow> run_sweep(const RunConfig& cfg) {
    cfg.validate();
    bool any_axis = !cfg.sweep_scan_times.empty() || !cfg.sweep_depth_scales.empty() ||
                    !cfg.sweep_width_scales.empty() || !cfg.sweep_controllers.empty() ||
                    !cfg.sweep_ff.empty();
    if (!any_axis)
        throw std::invalid_argument("run_sweep: no sweep axis configured");

    auto scan_times = cfg.sweep_scan_times.empty()
                          ? std::vector<double>{cfg.scan.scan_time_total}
                          : cfg.sweep_scan_times;
    auto depth_scales = cfg.sweep_depth_scales.empty() ? std::vector<double>{cfg.depth_scale}
                                                       : cfg.sweep_depth_scales;
    auto width_scales = cfg.sweep_width_scales.empty() ? std::vector<double>{cfg.width_scale}
                                                       : cfg.sweep_width_scales;
    auto controllers = cfg.sweep_controllers.empty()
                           ? std::vector<std::string>{cfg.controller}
                           : cfg.sweep_controllers;
    auto ffs = cfg.sweep_ff.empty() ? std::vector<int>{cfg.ff_enabled ? 1 : 0}
                                    : cfg.sweep_ff;

    const std::uint64_t master = *cfg.seed;
    GroundTruth truth;
    if (cfg.sweep_experiment == "scan") truth = make_ground_truth(cfg);

    std::vector<SweepRow> rows;
    int index = 0;
    for (const auto& controller : controllers)
        for (double t_scan : scan_times)
            for (double dscale : depth_scales)
                for (double wscale : width_scales)
                    for (int ff : ffs) {
                        SweepRow row;
                        row.index = index;
                        row.controller = controller;
                        row.experiment = cfg.sweep_experiment;
                        row.scan_time = t_scan;
                        row.depth_scale = dscale;
                        row.width_scale = wscale;
                        row.ff = ff != 0;
                        row.seed = derive_seed(master, static_cast<std::uint64_t>(index));

                        RunConfig vcfg = cfg;
                        vcfg.controller = controller;
                        vcfg.scan.scan_time_total = t_scan;
                        vcfg.depth_scale = dscale;
                        vcfg.width_scale = wscale;
                        vcfg.ff_enabled = ff != 0;
                        vcfg.seed = row.seed;
                        row.pixel_rate = static_cast<double>(vcfg.scan.lines) *
                                         vcfg.scan.pixels_per_line / t_scan;
                        row.speedup_vs_grid = grid_speedup(vcfg.scan);

                        try {
                            if (cfg.sweep_experiment == "regain") {
                                double shift = 0.5 * cfg.spectrum.dip_width(vcfg.dip);
                                if (vcfg.dip == DipSelector::Positive) shift = -shift;
                                // wide dips recover slowly; give every variant
                                // the same long window
                                RegainResult rr =
                                    run_regain(vcfg, row.seed, shift, 10.0, 400.0);
                                row.settle_time_s = rr.settle_time;
                                row.status = rr.settle_time >= 0.0 ? "ok" : "never_settled";
                            } else {
                                PairResult pr = run_scan_pair(vcfg, truth, row.seed);
                                row.faults = pr.neg.fault_samples + pr.pos.fault_samples;
                                if (pr.completed) {
                                    row.mse = pr.scores.mse;
                                    row.rmse_mv = pr.scores.rmse_mv;
                                    row.psnr_db = pr.scores.psnr_db;
                                } else {
                                    row.status = "dip_lost";
                                    row.mse = row.rmse_mv = row.psnr_db =
                                        std::numeric_limits<double>::quiet_NaN();
                                }
                            }
                        } catch (const std::exception& e) {
                            row.status = std::string("error:") + e.what();
                        }
                        rows.push_back(std::move(row));
                        ++index;
                    }
    return rows;
}

// ---------------------------------------------------------------------------
// artifacts

void write_record_csv(const std::string& path, const ScanRecord& record) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << "t,x,y,line,pixel,dir,v_b,v_b_c,v_b_ff,df_meas,fault\n";
    char buf[256];
    for (const auto& s : record) {
        std::snprintf(buf, sizeof buf,
                      "%.6f,%.6f,%.6f,%d,%d,%d,%.12g,%.12g,%.12g,%.12g,%d\n", s.t, s.x,
                      s.y, s.line, s.pixel_x, s.direction, s.v_b, s.v_b_c, s.v_b_ff,
                      s.df_meas, s.fault);
        f << buf;
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

ScanRecord read_record_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    ScanRecord rec;
    std::string line;
    std::getline(f, line);  // header
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        ScanSample s;
        std::stringstream ss(line);
        std::string cell;
        auto next = [&]() {
            if (!std::getline(ss, cell, ',')) throw std::runtime_error("short row in " + path);
            return cell;
        };
        s.t = std::stod(next());
        s.x = std::stod(next());
        s.y = std::stod(next());
        s.line = std::stoi(next());
        s.pixel_x = std::stoi(next());
        s.direction = std::stoi(next());
        s.v_b = std::stod(next());
        s.v_b_c = std::stod(next());
        s.v_b_ff = std::stod(next());
        s.df_meas = std::stod(next());
        s.fault = std::stoi(next());
        rec.push_back(s);
    }
    return rec;
}

std::string write_scan_artifacts(const std::string& out_dir, const RunConfig& cfg,
                                 const ScanResult& result, double wall_seconds) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    write_record_csv(out_dir + "/record.csv", result.record);

    std::string map_name =
        result.dip == DipSelector::Negative ? "map_neg.txt" : "map_pos.txt";
    write_matrix(out_dir + "/" + map_name, result.map.values);

    KeyValueFile manifest = cfg.to_kv();
    manifest.set("version", std::string(kCodeVersion));
    manifest.set("run.dip", to_string(result.dip));
    manifest.set("run.controller", result.controller);
    manifest.set("run.seed", static_cast<long long>(result.seed));
    manifest.set("run.v_init", result.v_init);
    manifest.set("run.delta_f_ref", result.delta_f_ref);
    manifest.set("run.phase_compensation_rad", result.derived_phase);
    manifest.set("run.gain", result.derived_gain);
    manifest.set("run.pll_alpha", result.derived_alpha);
    manifest.set("run.ff_enabled", static_cast<long long>(result.ff_was_enabled ? 1 : 0));
    manifest.set("run.ff_baseline", result.ff_baseline);
    manifest.set("run.dip_lost", static_cast<long long>(result.dip_lost ? 1 : 0));
    manifest.set("run.dip_lost_at", result.dip_lost_at);
    manifest.set("run.fault_samples", static_cast<long long>(result.fault_samples));
    manifest.set("run.samples", static_cast<long long>(result.record.size()));
    manifest.set("run.missing_pixels", static_cast<long long>(result.map.missing.size()));
    manifest.set("run.wall_seconds", wall_seconds);
    manifest.set("files", "record.csv " + map_name + " manifest.txt");
    std::string manifest_path = out_dir + "/manifest.txt";
    manifest.save(manifest_path);
    return manifest_path;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << "index,controller,experiment,scan_time,depth_scale,width_scale,ff,seed,"
         "status,faults,mse_v2,rmse_mv,psnr_db,settle_time_s,pixel_rate_px_s,"
         "speedup_vs_grid\n";
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf,
                      "%d,%s,%s,%.6g,%.6g,%.6g,%d,%llu,%s,%d,%.12g,%.12g,%.12g,%.6g,"
                      "%.6g,%.6g\n",
                      r.index, r.controller.c_str(), r.experiment.c_str(), r.scan_time,
                      r.depth_scale, r.width_scale, r.ff ? 1 : 0,
                      static_cast<unsigned long long>(r.seed), r.status.c_str(),
                      r.faults, r.mse, r.rmse_mv, r.psnr_db, r.settle_time_s,
                      r.pixel_rate, r.speedup_vs_grid);
        f << buf;
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

void write_sweep_summary(const std::string& path, const RunConfig& cfg,
                         const std::vector<SweepRow>& rows) {
    KeyValueFile kv;
    kv.set("version", std::string(kCodeVersion));
    kv.set("variants", static_cast<long long>(rows.size()));
    int failures = 0;
    for (const auto& r : rows)
        if (r.status != "ok") ++failures;
    kv.set("failed_variants", static_cast<long long>(failures));
    double pixels = static_cast<double>(cfg.scan.lines) * cfg.scan.pixels_per_line;
    kv.set("default.pixels", pixels);
    kv.set("default.scan_time_s", cfg.scan.scan_time_total);
    kv.set("default.pixel_rate_px_s", pixels / cfg.scan.scan_time_total);
    kv.set("grid_baseline_s_per_pixel", kGridSecondsPerPixel);
    kv.set("default.speedup_vs_grid", grid_speedup(cfg.scan));
    kv.save(path);
}

void write_metrics(const std::string& path, const ScoreResult& scores) {
    KeyValueFile kv;
    kv.set("mse_v2", scores.mse);
    kv.set("rmse_mv", scores.rmse_mv);
    kv.set("psnr_db", scores.psnr_db);
    kv.save(path);
}

} // namespace sqdm
