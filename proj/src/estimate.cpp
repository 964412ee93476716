#include "notchlab/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "notchlab/fft.hpp"
#include "notchlab/random.hpp"

namespace notchlab {

double apsd(const PowerSpectrum& spectrum, const Band& region) {
    spectrum.validate();
    region.validate();
    const BinRange bins = snap_band(spectrum.grid, region);
    if (bins.empty()) throw_validation("apsd: region covers no grid bins");
    double acc = 0.0;
    for (std::size_t k = bins.lo; k < bins.hi; ++k) acc += spectrum.psd[k];
    return acc / static_cast<double>(bins.count());
}

PhaseFilter build_phase_filter(const NotchSpec& notch, const FrequencyGrid& grid,
                               double tau_trial_ps) {
    const PerturbationFilter geom = build_filter(notch, grid);
    if (geom.primary.overlaps(geom.mirror))
        throw_validation("phase filter: notch band and its mirror overlap");

    PhaseFilter pf;
    pf.grid = grid;
    pf.notch = notch;
    pf.primary = geom.primary;
    pf.mirror = geom.mirror;
    pf.theta.assign(grid.n_bins, 0.0);

    // The mirror of ascending bin a is bin n - a, at exactly -freq(a); writing
    // the mirror phase by reflection keeps theta exactly odd, so the filtered
    // Q component stays a real signal.
    const double tau_s = tau_trial_ps * 1e-12;
    for (std::size_t a = pf.primary.lo; a < pf.primary.hi; ++a) {
        const double th = 2.0 * std::numbers::pi * grid.freq(a) * tau_s;
        pf.theta[a] = th;
        pf.theta[grid.n_bins - a] = -th;
    }
    return pf;
}

namespace {

std::vector<cplx> phase_one_pol(const std::vector<cplx>& x, const PhaseFilter& pf) {
    const std::size_t n = x.size();
    cvec fq(n);
    for (std::size_t i = 0; i < n; ++i) fq[i] = cplx(x[i].imag(), 0.0);
    fft_forward_inplace(fq);
    auto rotate = [&](const BinRange& r) {
        for (std::size_t a = r.lo; a < r.hi; ++a) {
            const double th = pf.theta[a];
            fq[fft_index(pf.grid, a)] *= cplx(std::cos(th), std::sin(th));
        }
    };
    rotate(pf.primary);
    rotate(pf.mirror);
    fft_inverse_inplace(fq);
    std::vector<cplx> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = cplx(x[i].real(), fq[i].real());
    return out;
}

}  // namespace

ComplexWaveform apply_phase_filter(const ComplexWaveform& wfm, const PhaseFilter& filter) {
    wfm.validate();
    if (fft_grid(wfm.sample_rate, wfm.size()) != filter.grid)
        throw_validation("phase filter: grid does not match waveform");
    if (filter.theta.size() != filter.grid.n_bins)
        throw_validation("phase filter: theta length does not match grid");

    const bool identity = std::all_of(filter.theta.begin(), filter.theta.end(),
                                      [](double t) { return t == 0.0; });
    if (identity) return wfm;

    ComplexWaveform out;
    out.sample_rate = wfm.sample_rate;
    out.label = wfm.label;
    out.pol_x = phase_one_pol(wfm.pol_x, filter);
    if (wfm.dual_pol()) out.pol_y = phase_one_pol(wfm.pol_y, filter);
    return out;
}

namespace {

// Scenario pieces that do not depend on the trial value.
struct SkewSetup {
    ComplexWaveform notched;  // perturbed, power-normalized instruction
    Band null_band;           // snapped notch band on the transmit grid, Hz
    FrequencyGrid tx_grid;
    double ref_density = 0.0;
};

SkewSetup prepare_skew(const SkewScenario& sc) {
    sc.wfm_org.validate();
    sc.notch.validate();
    if (sc.notch.kind != NotchKind::Single)
        throw_validation("skew: the monitored construction is a single notch; got a dual spec");
    if (sc.cfg.crosstalk && !sc.cfg.crosstalk->is_identity())
        throw_validation("skew: crosstalk must be compensated or disabled before skew estimation");
    if (!(sc.cfg.ref_band.lo_hz < sc.cfg.ref_band.hi_hz))
        throw_validation("skew: cfg.ref_band must be set; it anchors the cost reference");

    SkewSetup s;
    s.tx_grid = fft_grid(sc.wfm_org.sample_rate, sc.wfm_org.size());
    const PerturbationFilter f = build_filter(sc.notch, s.tx_grid);
    s.notched = apply_perturbation(sc.wfm_org, f, true, sc.cfg.ref_band).wfm;
    s.null_band = snapped_band_freqs(s.tx_grid, f.primary);
    s.ref_density = mean_band_density(sc.wfm_org, sc.cfg.ref_band);
    return s;
}

// One capture of an engineered waveform; monitored-band mean density over the
// scenario reference. The band interior keeps the estimator's window mainlobe
// clear of the band edges, as in stitching.
double capture_cost_linear(const SkewSetup& s, const ComplexWaveform& engineered,
                           const SkewScenario& sc, std::uint64_t seed) {
    ImpairmentConfig cfg = sc.cfg;
    cfg.seed = seed;
    const MeasurementTrace t = simulate_capture(engineered, cfg, sc.stage, sc.resolution_bw);
    const BinRange r = interior_bins(t.spectrum.grid, s.null_band);
    if (r.empty())
        throw_numeric("skew: notch band has no interior bins at this resolution bandwidth");
    double acc = 0.0;
    for (std::size_t k = r.lo; k < r.hi; ++k) acc += t.spectrum.psd[k];
    return acc / static_cast<double>(r.count()) / s.ref_density;
}

double to_db(double lin) { return 10.0 * std::log10(lin); }

}  // namespace

double skew_cost(double tau_trial_ps, const SkewScenario& sc) {
    const SkewSetup s = prepare_skew(sc);
    const PhaseFilter pf = build_phase_filter(sc.notch, s.tx_grid, tau_trial_ps);
    const ComplexWaveform engineered = apply_phase_filter(s.notched, pf);
    return to_db(capture_cost_linear(s, engineered, sc, sc.cfg.seed));
}

SkewEstimate estimate_skew(const SkewScenario& sc, double sweep_lo_ps, double sweep_hi_ps,
                           double step_ps, int n_repeats, int n_traces_avg) {
    if (!(sweep_lo_ps < sweep_hi_ps)) throw_validation("skew: sweep_lo must be below sweep_hi");
    if (!(step_ps > 0.0)) throw_validation("skew: sweep step must be > 0");
    if (n_repeats < 1) throw_validation("skew: need at least one repeat");
    if (n_traces_avg < 1) throw_validation("skew: need at least one capture per sweep point");

    const SkewSetup s = prepare_skew(sc);
    const std::size_t n_pts =
        static_cast<std::size_t>(std::floor((sweep_hi_ps - sweep_lo_ps) / step_ps + 1e-9)) + 1;
    if (n_pts < 3) throw_validation("skew: sweep needs at least three grid points");

    std::vector<double> taus(n_pts);
    for (std::size_t k = 0; k < n_pts; ++k)
        taus[k] = sweep_lo_ps + static_cast<double>(k) * step_ps;

    // lin[r][k]: capture-averaged linear cost. The seed depends only on the
    // repeat and capture index, so every sweep point within a repeat sees the
    // same noise draws and the curve shape is purely the trial mismatch.
    std::vector<std::vector<double>> lin(
        static_cast<std::size_t>(n_repeats), std::vector<double>(n_pts, 0.0));
    for (std::size_t k = 0; k < n_pts; ++k) {
        const PhaseFilter pf = build_phase_filter(sc.notch, s.tx_grid, taus[k]);
        const ComplexWaveform engineered = apply_phase_filter(s.notched, pf);
        for (int r = 0; r < n_repeats; ++r) {
            double acc = 0.0;
            for (int c = 0; c < n_traces_avg; ++c)
                acc += capture_cost_linear(
                    s, engineered, sc,
                    derive_seed(sc.cfg.seed, 'k', static_cast<std::uint64_t>(r),
                                static_cast<std::uint64_t>(c)));
            lin[static_cast<std::size_t>(r)][k] = acc / static_cast<double>(n_traces_avg);
        }
    }

    SkewEstimate est;
    for (int r = 0; r < n_repeats; ++r) {
        const std::vector<double>& c = lin[static_cast<std::size_t>(r)];

        std::size_t minima = 0;
        for (std::size_t k = 0; k < n_pts; ++k) {
            const bool left = (k == 0) || c[k] < c[k - 1];
            const bool right = (k + 1 == n_pts) || c[k] < c[k + 1];
            if (left && right) ++minima;
        }
        if (minima > 1) {
            std::string msg = "skew: cost curve is not unimodal (" + std::to_string(minima) +
                              " strict local minima); curve:";
            for (std::size_t k = 0; k < n_pts; ++k) {
                char buf[64];
                std::snprintf(buf, sizeof buf, " (%.6g ps, %.6g dB)", taus[k], to_db(c[k]));
                msg += buf;
            }
            throw_numeric(msg);
        }

        std::size_t i = 0;
        for (std::size_t k = 1; k < n_pts; ++k)
            if (c[k] < c[i]) i = k;

        double tau = taus[i];
        if (i > 0 && i + 1 < n_pts) {
            // vertex of the parabola through the three points; the leak power
            // is quadratic in the trial mismatch, so the fit is done on the
            // linear costs
            const double denom = c[i - 1] + c[i + 1] - 2.0 * c[i];
            if (denom > 0.0) {
                tau += 0.5 * step_ps * (c[i - 1] - c[i + 1]) / denom;
                tau = std::clamp(tau, taus[i - 1], taus[i + 1]);
            }
        }
        est.repeats.push_back(tau);
    }

    double mean = 0.0;
    for (double v : est.repeats) mean += v;
    mean /= static_cast<double>(est.repeats.size());
    est.tau_hat_ps = mean;
    if (est.repeats.size() > 1) {
        double ss = 0.0;
        for (double v : est.repeats) ss += (v - mean) * (v - mean);
        est.std_ps = std::sqrt(ss / static_cast<double>(est.repeats.size() - 1));
    }

    est.cost_curve.resize(n_pts);
    for (std::size_t k = 0; k < n_pts; ++k) {
        double acc = 0.0;
        for (int r = 0; r < n_repeats; ++r) acc += lin[static_cast<std::size_t>(r)][k];
        est.cost_curve[k] = {taus[k], to_db(acc / static_cast<double>(n_repeats))};
    }
    return est;
}

SnDnDiscrepancy sn_dn_discrepancy(const ComplexWaveform& wfm_org, const StitchPlan& plan_sn,
                                  const StitchPlan& plan_dn, const ImpairmentConfig& cfg,
                                  InterfaceStage stage, double resolution_bw, int n_avg) {
    plan_sn.validate();
    plan_dn.validate();
    if (plan_sn.kind != NotchKind::Single)
        throw_validation("discrepancy: first plan must be a single-notch sweep");
    if (plan_dn.kind != NotchKind::Dual)
        throw_validation("discrepancy: second plan must be a dual-notch sweep");
    if (plan_sn.boi.lo_hz != plan_dn.boi.lo_hz || plan_sn.boi.hi_hz != plan_dn.boi.hi_hz)
        throw_validation("discrepancy: plans cover different bands of interest");

    const auto t_sn = run_plan(plan_sn, wfm_org, cfg, stage, resolution_bw, n_avg);
    const auto t_dn = run_plan(plan_dn, wfm_org, cfg, stage, resolution_bw, n_avg);

    SnDnDiscrepancy d;
    d.single_notch = compute_sndr(recover_signal_psd(t_sn).psd, stitch_nfl(t_sn));
    d.dual_notch = compute_sndr(recover_signal_psd(t_dn).psd, stitch_nfl(t_dn));
    if (!(d.single_notch.grid == d.dual_notch.grid))
        throw_numeric("discrepancy: the two profiles landed on different grids");
    d.grid = d.dual_notch.grid;
    d.delta_db.resize(d.grid.n_bins);
    for (std::size_t k = 0; k < d.grid.n_bins; ++k)
        d.delta_db[k] = d.dual_notch.sndr_db[k] - d.single_notch.sndr_db[k];
    return d;
}

EyeClosureFit eye_closure_fit(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 2) throw_validation("eye fit: need at least two points");
    double xmin = points.front().first, xmax = xmin;
    for (const auto& [x, y] : points) {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
    }
    if (!(xmax > xmin))
        throw_validation("eye fit: all noise loadings are identical; the slope is undetermined");

    const double n = static_cast<double>(points.size());
    double xbar = 0.0, ybar = 0.0;
    for (const auto& [x, y] : points) {
        xbar += x;
        ybar += y;
    }
    xbar /= n;
    ybar /= n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : points) {
        sxx += (x - xbar) * (x - xbar);
        sxy += (x - xbar) * (y - ybar);
    }
    const double slope = sxy / sxx;
    if (!(slope > 0.0))
        throw_numeric("eye fit: non-positive slope; eye closure is undefined for these points");
    const double intercept = ybar - slope * xbar;

    EyeClosureFit fit;
    fit.ec = 1.0 / slope;
    fit.nsr_trx = intercept / slope;
    double ss = 0.0;
    for (const auto& [x, y] : points) {
        const double e = y - (slope * x + intercept);
        ss += e * e;
    }
    fit.residual = std::sqrt(ss / n);
    return fit;
}

}  // namespace notchlab
