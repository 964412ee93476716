#include "notchlab/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "notchlab/estimate.hpp"
#include "notchlab/keyfile.hpp"
#include "notchlab/psd.hpp"
#include "notchlab/signal.hpp"
#include "notchlab/trace_io.hpp"

namespace notchlab {

namespace {

double db10(double lin) { return 10.0 * std::log10(lin); }

void require_kind(const Scenario& sc, ScenarioKind want, const char* cmd) {
    if (sc.kind != want)
        throw_validation(std::string("scenario '") + sc.name + "' has kind '" +
                         to_string(sc.kind) + "', command '" + cmd + "' needs '" +
                         to_string(want) + "'");
}

void require_two_sided(const Scenario& sc, const char* cmd) {
    if (sc.stage == InterfaceStage::E2E)
        throw_validation(std::string(cmd) +
                         ": stage e2e reports one-sided spectra; use card2osa or card2card");
}

std::string pair_list_text(const std::vector<std::pair<double, double>>& pts) {
    std::string out;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i) out += ",";
        out += Report::format_double(pts[i].first) + ":" + Report::format_double(pts[i].second);
    }
    return out;
}

std::string cplx_list_text(const CrosstalkProfile::Points& pts) {
    std::string out;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i) out += ",";
        out += Report::format_double(pts[i].first) + ":" +
               Report::format_double(pts[i].second.real()) + ":" +
               Report::format_double(pts[i].second.imag());
    }
    return out;
}

// The resolved configuration, so a report is self-describing even when the
// scenario file leaned on defaults.
void echo_scenario(Report& rep, const Scenario& sc) {
    rep.put("scenario.name", sc.name);
    rep.put("scenario.kind", to_string(sc.kind));
    rep.put("scenario.baud_hz", sc.baud_hz);
    rep.put("scenario.rolloff", sc.rolloff);
    rep.put_uint("scenario.n_symbols", sc.n_symbols);
    rep.put_uint("scenario.oversampling", sc.oversampling);
    rep.put_uint("scenario.seed", sc.seed);
    rep.put("scenario.stage", to_string(sc.stage));
    rep.put("scenario.rbw_hz", sc.rbw_hz);
    rep.put_int("scenario.captures", sc.captures);
    const Band boi = sc.effective_boi();
    rep.put("scenario.boi.lo_hz", boi.lo_hz);
    rep.put("scenario.boi.hi_hz", boi.hi_hz);
    if (sc.kind == ScenarioKind::Stitch || sc.kind == ScenarioKind::Xtalk) {
        rep.put("scenario.plan.kind", sc.plan_kind == NotchKind::Single ? "single" : "dual");
        rep.put("scenario.plan.notch_width_hz", sc.notch_width_hz);
    }
    if (sc.kind == ScenarioKind::Skew) {
        rep.put("scenario.skew.sweep_lo_ps", sc.skew.sweep_lo_ps);
        rep.put("scenario.skew.sweep_hi_ps", sc.skew.sweep_hi_ps);
        rep.put("scenario.skew.step_ps", sc.skew.step_ps);
        rep.put_int("scenario.skew.repeats", sc.skew.repeats);
        rep.put("scenario.skew.notch_center_hz", sc.skew.notch_center_hz);
        rep.put("scenario.skew.notch_width_hz", sc.skew.notch_width_hz);
    }
    if (sc.impair.nfl_tx_db) rep.put("scenario.impair.nfl_tx_db", *sc.impair.nfl_tx_db);
    if (sc.impair.nfl_rx_db) rep.put("scenario.impair.nfl_rx_db", *sc.impair.nfl_rx_db);
    if (sc.impair.dac_bits) rep.put_int("scenario.impair.dac_bits", *sc.impair.dac_bits);
    if (sc.impair.skew_ps) rep.put("scenario.impair.skew_ps", *sc.impair.skew_ps);
    if (sc.impair.iq_gain_imbalance_db)
        rep.put("scenario.impair.iq_gain_imbalance_db", *sc.impair.iq_gain_imbalance_db);
    if (!sc.impair.nfl_shape.points.empty())
        rep.put("scenario.impair.nfl_shape.points", pair_list_text(sc.impair.nfl_shape.points));
    if (!sc.impair.nfl_shape.lines.empty())
        rep.put("scenario.impair.nfl_shape.lines", pair_list_text(sc.impair.nfl_shape.lines));
    if (sc.impair.crosstalk) {
        rep.put("scenario.impair.xtalk.ii", cplx_list_text(sc.impair.crosstalk->ii));
        rep.put("scenario.impair.xtalk.qq", cplx_list_text(sc.impair.crosstalk->qq));
        if (!sc.impair.crosstalk->qi.empty())
            rep.put("scenario.impair.xtalk.qi", cplx_list_text(sc.impair.crosstalk->qi));
        if (!sc.impair.crosstalk->iq.empty())
            rep.put("scenario.impair.xtalk.iq", cplx_list_text(sc.impair.crosstalk->iq));
    }
}

void put_grid(Report& rep, const std::string& prefix, const FrequencyGrid& g) {
    rep.put(prefix + ".f_start_hz", g.f_start);
    rep.put(prefix + ".f_step_hz", g.f_step);
    rep.put_uint(prefix + ".n_bins", g.n_bins);
}

bool floors_enabled(const Scenario& sc) {
    return sc.impair.nfl_tx_db.has_value() ||
           (sc.stage == InterfaceStage::Card2Card && sc.impair.nfl_rx_db.has_value());
}

// Injected floor density at one frequency: the known part of what stitching
// should recover. Spectral lines are excluded (they are tones, not density)
// and masked out of the error metrics instead.
double truth_floor_density(const Scenario& sc, double ref, double f) {
    double t = 0.0;
    const double w = sc.impair.nfl_shape.points.empty() ? 1.0 : sc.impair.nfl_shape.weight_at(f);
    if (sc.impair.nfl_tx_db) t += std::pow(10.0, *sc.impair.nfl_tx_db / 10.0) * ref * w;
    if (sc.stage == InterfaceStage::Card2Card && sc.impair.nfl_rx_db)
        t += std::pow(10.0, *sc.impair.nfl_rx_db / 10.0) * ref * w;
    return t;
}

bool near_spectral_line(const Scenario& sc, double f) {
    for (const auto& [f_line, db] : sc.impair.nfl_shape.lines)
        if (std::abs(f - f_line) <= 2.0 * sc.rbw_hz) return true;
    return false;
}

double median_of(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    return v[mid];
}

struct RunningRms {
    double ss = 0.0;
    double peak = 0.0;
    std::size_t n = 0;
    void add(double err) {
        ss += err * err;
        peak = std::max(peak, std::abs(err));
        ++n;
    }
    double rms() const { return n ? std::sqrt(ss / static_cast<double>(n)) : 0.0; }
};

}  // namespace

Report cmd_stitch(const Scenario& sc) {
    require_kind(sc, ScenarioKind::Stitch, "stitch");
    require_two_sided(sc, "stitch");

    Report rep;
    rep.command = "stitch";
    echo_scenario(rep, sc);

    const ComplexWaveform wfm = sc.make_waveform();
    const StitchPlan plan = sc.make_plan(sc.plan_kind);
    const auto traces = run_plan(plan, wfm, sc.impair, sc.stage, sc.rbw_hz, sc.captures);
    const PowerSpectrum nfl = stitch_nfl(traces);
    const RecoveredSignal rec = recover_signal_psd(traces);
    const SNDRProfile sndr = compute_sndr(rec.psd, nfl);
    const SmallNotchReport snc = small_notch_check(traces);

    rep.put_uint("plan.notches", plan.notches.size());
    put_grid(rep, "output.grid", nfl.grid);
    rep.put_uint("recovered.n_clamped", rec.n_clamped);
    rep.put("smallnotch.max_norm_deviation", snc.max_norm_deviation);
    rep.put("smallnotch.worst_error_db", snc.worst_error_db);
    rep.put_uint("smallnotch.approximation_unsafe", snc.approximation_unsafe ? 1 : 0);

    // ground truth: the injected floor is known analytically and the clean
    // signal spectrum is measured from the noiseless waveform on the same
    // estimator settings
    const double ref = mean_band_density(wfm, sc.impair.ref_band);
    const PowerSpectrum clean = estimate_psd(wfm, sc.rbw_hz);
    if (std::abs(clean.grid.f_step - nfl.grid.f_step) > 1e-6)
        throw_numeric("stitch: truth and output grids disagree");
    const std::ptrdiff_t offset =
        static_cast<std::ptrdiff_t>(std::llround((nfl.grid.f_start - clean.grid.f_start) /
                                                 clean.grid.f_step));

    const bool with_truth = floors_enabled(sc);
    const double flat_edge = (1.0 - sc.rolloff) * sc.baud_hz / 2.0;
    RunningRms nfl_err, sig_err, sndr_err, sndr_flat_err;
    std::vector<double> sndr_flat;
    std::vector<std::vector<double>> nfl_rows, sig_rows, sndr_rows;
    const double nan = std::numeric_limits<double>::quiet_NaN();

    for (std::size_t k = 0; k < nfl.grid.n_bins; ++k) {
        const double f = nfl.grid.freq(k);
        const double t_floor = with_truth ? truth_floor_density(sc, ref, f) : 0.0;
        const double t_sig = clean.psd[static_cast<std::size_t>(offset + static_cast<std::ptrdiff_t>(k))];
        const bool masked = near_spectral_line(sc, f);

        const double est_floor_db = db10(nfl.psd[k] / ref);
        const double tru_floor_db = t_floor > 0.0 ? db10(t_floor / ref) : nan;
        double floor_err = nan;
        if (with_truth && !masked && t_floor > 0.0 && nfl.psd[k] > 0.0) {
            floor_err = est_floor_db - tru_floor_db;
            nfl_err.add(floor_err);
        }
        nfl_rows.push_back({f, est_floor_db, tru_floor_db, floor_err});

        const double est_sig_db = rec.psd.psd[k] > 0.0 ? db10(rec.psd.psd[k] / ref) : nan;
        const double tru_sig_db = t_sig > 0.0 ? db10(t_sig / ref) : nan;
        double s_err = nan;
        if (with_truth && !masked && t_sig >= t_floor && rec.psd.psd[k] > 0.0 && t_sig > 0.0) {
            s_err = est_sig_db - tru_sig_db;
            sig_err.add(s_err);
        }
        sig_rows.push_back({f, est_sig_db, tru_sig_db, s_err});

        const double est_sndr = sndr.sndr_db[k];
        const double tru_sndr =
            (with_truth && t_floor > 0.0 && t_sig > 0.0) ? db10(t_sig / t_floor) : nan;
        double d_err = nan;
        if (std::isfinite(est_sndr) && std::isfinite(tru_sndr) && !masked && t_sig >= t_floor) {
            d_err = est_sndr - tru_sndr;
            sndr_err.add(d_err);
            if (std::abs(f) <= flat_edge) {
                sndr_flat_err.add(d_err);
                sndr_flat.push_back(est_sndr);
            }
        }
        sndr_rows.push_back({f, est_sndr, tru_sndr, d_err});
    }

    rep.put("truth.ref_density_per_hz", ref);
    if (with_truth) {
        rep.put("metrics.nfl_rms_error_db", nfl_err.rms());
        rep.put("metrics.nfl_max_abs_error_db", nfl_err.peak);
        rep.put_uint("metrics.nfl_bins_used", nfl_err.n);
        rep.put("metrics.signal_rms_error_db", sig_err.rms());
        rep.put("metrics.sndr_rms_error_db", sndr_err.rms());
        rep.put_uint("metrics.sndr_bins_used", sndr_err.n);
        rep.put("metrics.sndr_flat_rms_error_db", sndr_flat_err.rms());
        rep.put("metrics.sndr_flat_median_db", median_of(sndr_flat));
    }

    rep.add_array("nfl", "freq_hz,est_db,truth_db,err_db", std::move(nfl_rows));
    rep.add_array("signal", "freq_hz,est_db,truth_db,err_db", std::move(sig_rows));
    rep.add_array("sndr", "freq_hz,est_db,truth_db,err_db", std::move(sndr_rows));
    return rep;
}

Report cmd_skew(const Scenario& sc) {
    require_kind(sc, ScenarioKind::Skew, "skew");

    Report rep;
    rep.command = "skew";
    echo_scenario(rep, sc);

    SkewScenario ssc;
    ssc.wfm_org = sc.make_waveform();
    ssc.notch = NotchSpec{NotchKind::Single, sc.skew.notch_center_hz, sc.skew.notch_width_hz};
    ssc.cfg = sc.impair;
    ssc.stage = sc.stage;
    ssc.resolution_bw = sc.rbw_hz;

    const SkewEstimate est = estimate_skew(ssc, sc.skew.sweep_lo_ps, sc.skew.sweep_hi_ps,
                                           sc.skew.step_ps, sc.skew.repeats, sc.captures);

    rep.put("skew.tau_hat_ps", est.tau_hat_ps);
    rep.put("skew.std_ps", est.std_ps);
    rep.put_uint("skew.repeats", est.repeats.size());
    const double truth = sc.impair.skew_ps.value_or(0.0);
    rep.put("truth.skew_ps", truth);
    rep.put("metrics.tau_error_ps", est.tau_hat_ps - truth);

    std::vector<std::vector<double>> curve, reps;
    for (const auto& [tau, cost] : est.cost_curve) curve.push_back({tau, cost});
    for (std::size_t r = 0; r < est.repeats.size(); ++r)
        reps.push_back({static_cast<double>(r), est.repeats[r]});
    rep.add_array("cost_curve", "tau_trial_ps,cost_db", std::move(curve));
    rep.add_array("repeats", "repeat,tau_hat_ps", std::move(reps));
    return rep;
}

Report cmd_xtalk(const Scenario& sc) {
    require_kind(sc, ScenarioKind::Xtalk, "xtalk");
    require_two_sided(sc, "xtalk");

    Report rep;
    rep.command = "xtalk";
    echo_scenario(rep, sc);

    const ComplexWaveform wfm = sc.make_waveform();
    const StitchPlan plan_sn = sc.make_plan(NotchKind::Single);
    const StitchPlan plan_dn = sc.make_plan(NotchKind::Dual);
    const SnDnDiscrepancy d = sn_dn_discrepancy(wfm, plan_sn, plan_dn, sc.impair, sc.stage,
                                                sc.rbw_hz, sc.captures);

    put_grid(rep, "output.grid", d.grid);
    double acc = 0.0, peak = 0.0;
    std::size_t used = 0;
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < d.grid.n_bins; ++k) {
        const double v = d.delta_db[k];
        if (std::isfinite(v)) {
            acc += v;
            peak = std::max(peak, std::abs(v));
            ++used;
        }
        rows.push_back({d.grid.freq(k), v, d.single_notch.sndr_db[k], d.dual_notch.sndr_db[k]});
    }
    rep.put_uint("discrepancy.bins_used", used);
    rep.put("discrepancy.mean_db", used ? acc / static_cast<double>(used) : 0.0);
    rep.put("discrepancy.max_abs_db", peak);
    rep.add_array("discrepancy", "freq_hz,delta_db,sn_sndr_db,dn_sndr_db", std::move(rows));
    return rep;
}

namespace {

bool chain_engaged(const ImpairmentConfig& c) {
    return c.nfl_tx_db || c.nfl_rx_db || c.dac_bits ||
           (c.skew_ps && *c.skew_ps != 0.0) ||
           (c.iq_gain_imbalance_db && *c.iq_gain_imbalance_db != 0.0) ||
           (c.crosstalk && !c.crosstalk->is_identity());
}

}  // namespace

Report cmd_psd(const Scenario& sc) {
    require_kind(sc, ScenarioKind::Psd, "psd");

    Report rep;
    rep.command = "psd";
    echo_scenario(rep, sc);

    const ComplexWaveform wfm = sc.make_waveform();
    const PowerSpectrum spec = estimate_psd(wfm, sc.rbw_hz);
    const Band boi = sc.effective_boi();
    const double ref = mean_band_density(wfm, boi);

    put_grid(rep, "output.grid", spec.grid);
    rep.put("waveform.mean_power", wfm.mean_power());
    rep.put("waveform.peak_to_rms", peak_to_rms(wfm));
    rep.put("psd.total_power", spec.total_power());
    rep.put("psd.boi_power", spec.band_power(snap_band(spec.grid, boi)));
    rep.put("truth.ref_density_per_hz", ref);
    rep.put("metrics.parseval_rel_error",
            std::abs(spec.total_power() - wfm.mean_power()) / wfm.mean_power());

    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < spec.grid.n_bins; ++k)
        rows.push_back({spec.grid.freq(k), db10(spec.psd[k] / ref)});
    rep.add_array("psd", "freq_hz,psd_db", std::move(rows));

    if (chain_engaged(sc.impair)) {
        const MeasurementTrace cap = simulate_capture(wfm, sc.impair, sc.stage, sc.rbw_hz);
        rep.put("capture.total_power", cap.spectrum.total_power());
        put_grid(rep, "capture.grid", cap.spectrum.grid);
        std::vector<std::vector<double>> crows;
        for (std::size_t k = 0; k < cap.spectrum.grid.n_bins; ++k)
            crows.push_back({cap.spectrum.grid.freq(k), db10(cap.spectrum.psd[k] / ref)});
        rep.add_array("capture", "freq_hz,psd_db", std::move(crows));
    }
    return rep;
}

Report cmd_import(const std::string& csv_path, const std::string& meta_path) {
    const MeasurementTrace trace = import_trace(csv_path, meta_path);

    // reference density, for dB-relative plotting only
    double ref = 1.0;
    {
        KeyFile meta = KeyFile::parse(read_text_file(meta_path), meta_path);
        if (auto v = meta.take_double("ref_density_per_hz")) ref = *v;
    }

    Report rep;
    rep.command = "import";
    rep.put("source.csv", csv_path);
    rep.put("source.meta", meta_path);
    put_grid(rep, "output.grid", trace.spectrum.grid);
    rep.put("output.resolution_bw_hz", trace.spectrum.resolution_bw);
    rep.put("output.total_power", trace.spectrum.total_power());
    rep.put("trace.stage", to_string(trace.stage));
    rep.put_uint("trace.normalized", trace.normalized ? 1 : 0);
    rep.put("trace.norm", trace.norm);
    rep.put("trace.notch.kind", trace.notch.kind == NotchKind::Single ? "single" : "dual");
    rep.put("trace.notch.center_hz", trace.notch.center_hz);
    rep.put("trace.notch.width_hz", trace.notch.width_hz);
    rep.put_uint("trace.truth_attached", trace.truth.has_value() ? 1 : 0);

    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < trace.spectrum.grid.n_bins; ++k)
        rows.push_back({trace.spectrum.grid.freq(k), db10(trace.spectrum.psd[k] / ref)});
    rep.add_array("trace", "freq_hz,psd_db", std::move(rows));
    return rep;
}

int run_command(int argc, const char* const* argv) {
    CLI::App app{"notch-perturbation transceiver noise toolkit"};
    app.require_subcommand(1);

    struct SubArgs {
        CLI::App* sub = nullptr;
        std::string scenario;
        std::string out;
        std::uint64_t seed = 0;
        int repeats = 0;
        CLI::Option* seed_opt = nullptr;
        CLI::Option* repeats_opt = nullptr;
    };
    std::array<SubArgs, 4> subs;
    const std::array<std::pair<const char*, const char*>, 4> names{{
        {"stitch", "run a notch sweep, stitch the noise floor, recover signal and SNDR"},
        {"skew", "sweep a trial phase filter and estimate IQ skew"},
        {"xtalk", "compare single- and dual-notch SNDR profiles"},
        {"psd", "estimate the waveform PSD (and the captured spectrum if impaired)"},
    }};
    for (std::size_t i = 0; i < subs.size(); ++i) {
        SubArgs& a = subs[i];
        a.sub = app.add_subcommand(names[i].first, names[i].second);
        a.sub->add_option("--scenario", a.scenario, "scenario file")->required();
        a.sub->add_option("--out", a.out, "output directory (default $NOTCHLAB_OUT or ./out)");
        a.seed_opt = a.sub->add_option("--seed", a.seed, "override the scenario seed");
        a.repeats_opt = a.sub->add_option(
            "--repeats", a.repeats,
            "override skew.repeats (skew) or captures (stitch/xtalk/psd)");
    }

    std::string import_csv, import_meta, import_out;
    CLI::App* imp = app.add_subcommand("import", "read a trace CSV + sidecar, resample, report");
    imp->add_option("trace", import_csv, "trace CSV file")->required();
    imp->add_option("--meta", import_meta, "sidecar path (default: trace path + .meta)");
    imp->add_option("--out", import_out, "output directory (default $NOTCHLAB_OUT or ./out)");

    try {
        app.parse(argc, const_cast<char**>(argv));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    const char* env_out = std::getenv("NOTCHLAB_OUT");
    auto resolve_out = [&](const std::string& flag) {
        if (!flag.empty()) return flag;
        if (env_out && *env_out) return std::string(env_out);
        return std::string("out");
    };

    try {
        const auto t0 = std::chrono::steady_clock::now();
        Report rep;
        std::string dir;

        if (imp->parsed()) {
            const std::string meta = import_meta.empty() ? sidecar_path(import_csv) : import_meta;
            rep = cmd_import(import_csv, meta);
            dir = resolve_out(import_out) + "/" +
                  std::filesystem::path(import_csv).stem().string() + "-import";
        } else {
            const SubArgs* a = nullptr;
            for (const auto& s : subs)
                if (s.sub->parsed()) a = &s;
            Scenario sc = load_scenario(a->scenario);
            if (a->seed_opt->count()) {
                sc.seed = a->seed;
                sc.impair.seed = a->seed;
            }
            if (a->repeats_opt->count()) {
                if (a->repeats < 1) throw_usage("--repeats must be >= 1");
                if (sc.kind == ScenarioKind::Skew) sc.skew.repeats = a->repeats;
                else sc.captures = a->repeats;
            }
            if (a->sub == subs[0].sub) rep = cmd_stitch(sc);
            else if (a->sub == subs[1].sub) rep = cmd_skew(sc);
            else if (a->sub == subs[2].sub) rep = cmd_xtalk(sc);
            else rep = cmd_psd(sc);
            dir = resolve_out(a->out) + "/" + sc.name;
        }

        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rep.write(dir);
        rep.write_timing(dir, secs);
        std::cout << "wrote " << dir << "/report.txt\n";
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace notchlab
