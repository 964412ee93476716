#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "notchlab/errors.hpp"
#include "notchlab/estimate.hpp"
#include "notchlab/fft.hpp"
#include "notchlab/psd.hpp"
#include "notchlab/random.hpp"
#include "notchlab/signal.hpp"

using namespace notchlab;

namespace {

constexpr double kBaud = 95e9;
constexpr double kTsPs = 1e12 / kBaud;
const Band kBoi{-49.875e9, 49.875e9};

double db(double lin) { return 10.0 * std::log10(lin); }

ComplexWaveform source(std::uint64_t seed, std::size_t n_symbols) {
    return generate_rrc_qpsk(kBaud, 0.05, n_symbols, 4, seed);
}

// Mean signal density over the band of interest, from the transform.
double ref_density(const ComplexWaveform& w) {
    const FrequencyGrid g = fft_grid(w.sample_rate, w.size());
    const BinRange bins = snap_band(g, kBoi);
    auto spec = fft_forward(w.pol_x);
    double p = 0.0;
    for (std::size_t a = bins.lo; a < bins.hi; ++a) p += std::norm(spec[fft_index(g, a)]);
    p /= static_cast<double>(w.size()) * static_cast<double>(w.size());
    return p / (static_cast<double>(bins.count()) * g.f_step);
}

bool error_containing(const std::function<void()>& fn, ErrorKind kind, const std::string& needle) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind() == kind && std::string(e.what()).find(needle) != std::string::npos;
    }
    return false;
}

bool validation_error_containing(const std::function<void()>& fn, const std::string& needle) {
    return error_containing(fn, ErrorKind::Validation, needle);
}

// Notched (not normalized) copy of a waveform plus the band the notch emptied.
struct Notched {
    ComplexWaveform wfm;
    Band null_band;
    FrequencyGrid tx_grid;
};

Notched make_notched(const ComplexWaveform& w, const NotchSpec& spec) {
    Notched n;
    n.tx_grid = fft_grid(w.sample_rate, w.size());
    const PerturbationFilter f = build_filter(spec, n.tx_grid);
    n.wfm = apply_perturbation(w, f, false, kBoi).wfm;
    n.null_band = snapped_band_freqs(n.tx_grid, f.primary);
    return n;
}

}  // namespace

TEST_CASE("apsd: mean spectral density over a band") {
    PowerSpectrum flat;
    flat.grid = FrequencyGrid{0.0, 1e9, 100};
    flat.resolution_bw = 1e9;
    flat.psd.assign(100, 3.5e-12);
    CHECK(apsd(flat, Band{10e9, 20e9}) == doctest::Approx(3.5e-12).epsilon(1e-14));

    PowerSpectrum ramp = flat;
    for (std::size_t k = 0; k < 100; ++k) ramp.psd[k] = static_cast<double>(k);
    // bins 10..19 inclusive land inside; their mean index is 14.5
    CHECK(apsd(ramp, Band{9.5e9, 19.5e9}) == doctest::Approx(14.5).epsilon(1e-14));

    CHECK(validation_error_containing([&] { apsd(flat, Band{300e9, 310e9}); }, "no grid bins"));

    // unit-power waveform: density over the whole grid is 1 / grid span
    auto w = source(11, 4096);
    const double scale = 1.0 / std::sqrt(w.mean_power());
    for (auto& v : w.pol_x) v *= scale;
    const auto spec = estimate_psd(w, 150e6);
    const Band whole{spec.grid.f_start - spec.grid.f_step / 2.0,
                     spec.grid.f_end() + spec.grid.f_step / 2.0};
    CHECK(apsd(spec, whole) == doctest::Approx(1.0 / spec.grid.span()).epsilon(0.02));
}

TEST_CASE("apsd: a notch band reads the injected floor") {
    auto w = source(13, 8192);
    const NotchSpec spec{NotchKind::Dual, 15e9, 2e9};
    auto n = make_notched(w, spec);

    ImpairmentConfig cfg;
    cfg.nfl_tx_db = -21.0;
    cfg.ref_band = kBoi;

    double acc = 0.0;
    for (int c = 0; c < 4; ++c) {
        cfg.seed = 150 + static_cast<std::uint64_t>(c);
        auto t = simulate_capture(n.wfm, cfg, InterfaceStage::Card2OSA, 150e6);
        acc += apsd(t.spectrum, Band{14.2e9, 15.8e9});  // well clear of the notch edges
    }
    CHECK(db(acc / 4.0 / ref_density(w)) == doctest::Approx(-21.0).epsilon(0.03));
}

TEST_CASE("phase filter: linear-phase geometry on the band pair") {
    auto w = source(21, 2048);
    const FrequencyGrid g = fft_grid(w.sample_rate, w.size());
    const NotchSpec spec{NotchKind::Single, 20e9, 2e9};

    const PhaseFilter pf = build_phase_filter(spec, g, 0.5);
    REQUIRE(pf.theta.size() == g.n_bins);
    REQUIRE(!pf.primary.empty());

    // each band bin carries 2*pi*f*tau; at 20 GHz and 0.5 ps that is 2*pi/100
    std::size_t nonzero = 0;
    for (std::size_t a = 0; a < g.n_bins; ++a)
        if (pf.theta[a] != 0.0) ++nonzero;
    CHECK(nonzero == 2 * pf.primary.count());
    for (std::size_t a = pf.primary.lo; a < pf.primary.hi; ++a) {
        CHECK(pf.theta[a] ==
              doctest::Approx(2.0 * std::numbers::pi * g.freq(a) * 0.5e-12).epsilon(1e-12));
        CHECK(pf.theta[g.n_bins - a] == -pf.theta[a]);
    }
    std::size_t near = pf.primary.lo;
    for (std::size_t a = pf.primary.lo; a < pf.primary.hi; ++a)
        if (std::abs(g.freq(a) - 20e9) < std::abs(g.freq(near) - 20e9)) near = a;
    CHECK(pf.theta[near] == doctest::Approx(2.0 * std::numbers::pi * 0.01).epsilon(0.005));

    const PhaseFilter id = build_phase_filter(spec, g, 0.0);
    for (double t : id.theta) CHECK(t == 0.0);

    CHECK(validation_error_containing(
        [&] { build_phase_filter(NotchSpec{NotchKind::Single, 0.5e9, 2e9}, g, 0.3); }, "mirror"));
}

TEST_CASE("phase filter: application touches only Q and is invertible") {
    auto w = source(31, 2048);
    const FrequencyGrid g = fft_grid(w.sample_rate, w.size());
    const NotchSpec spec{NotchKind::Single, 20e9, 2e9};

    const auto w2 = apply_phase_filter(w, build_phase_filter(spec, g, 0.8));
    double qp_in = 0.0, qp_out = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        CHECK(w2.pol_x[i].real() == w.pol_x[i].real());
        qp_in += w.pol_x[i].imag() * w.pol_x[i].imag();
        qp_out += w2.pol_x[i].imag() * w2.pol_x[i].imag();
    }
    CHECK(qp_out == doctest::Approx(qp_in).epsilon(1e-12));

    // zero trial value short-circuits to an exact copy
    const auto wid = apply_phase_filter(w, build_phase_filter(spec, g, 0.0));
    CHECK(wid.pol_x == w.pol_x);

    // opposite trial values cancel
    const auto back = apply_phase_filter(w2, build_phase_filter(spec, g, -0.8));
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        worst = std::max(worst, std::abs(back.pol_x[i].imag() - w.pol_x[i].imag()));
        scale = std::max(scale, std::abs(w.pol_x[i].imag()));
    }
    CHECK(worst < 1e-12 * scale);

    auto other = source(32, 1024);
    CHECK(validation_error_containing(
        [&] { apply_phase_filter(other, build_phase_filter(spec, g, 0.1)); }, "grid"));
}

TEST_CASE("phase filter: the matching advance empties a skewed notch again") {
    auto w = source(41, 2048);
    const NotchSpec spec{NotchKind::Single, 20e9, 2e9};
    auto n = make_notched(w, spec);

    const auto skewed = apply_skew(n.wfm, 0.8, kTsPs);
    const auto fixed = apply_phase_filter(skewed, build_phase_filter(spec, n.tx_grid, 0.8));

    const BinRange hole = snap_band(n.tx_grid, n.null_band);
    auto band_peak = [&](const ComplexWaveform& v) {
        auto spec_v = fft_forward(v.pol_x);
        double m = 0.0;
        for (std::size_t a = hole.lo; a < hole.hi; ++a)
            m = std::max(m, std::norm(spec_v[fft_index(n.tx_grid, a)]));
        return m;
    };
    auto full_peak = [&](const ComplexWaveform& v) {
        auto spec_v = fft_forward(v.pol_x);
        double m = 0.0;
        for (const auto& c : spec_v) m = std::max(m, std::norm(c));
        return m;
    };

    const double peak = full_peak(w);
    CHECK(band_peak(n.wfm) < 1e-24 * peak);     // construction leaves the band empty
    CHECK(band_peak(skewed) > 1e-6 * peak);     // skew fills it
    CHECK(band_peak(fixed) < 1e-20 * peak);     // the advance cancels the delay exactly
}

TEST_CASE("skew cost: floor at the truth, convex ordering in notch center") {
    SkewScenario sc;
    sc.wfm_org = source(51, 8192);
    sc.notch = NotchSpec{NotchKind::Single, 20e9, 2e9};
    sc.cfg.nfl_tx_db = -21.0;
    sc.cfg.ref_band = kBoi;
    sc.cfg.symbol_period_ps = kTsPs;
    sc.cfg.seed = 900;
    sc.stage = InterfaceStage::Card2OSA;
    sc.resolution_bw = 150e6;

    auto mean_cost = [&](double tau_trial, SkewScenario s) {
        double acc = 0.0;
        for (int c = 0; c < 4; ++c) {
            s.cfg.seed = 900 + static_cast<std::uint64_t>(c);
            acc += std::pow(10.0, skew_cost(tau_trial, s) / 10.0);
        }
        return db(acc / 4.0);
    };

    // no skew, no trial: the cost sits on the injected floor
    CHECK(mean_cost(0.0, sc) == doctest::Approx(-21.0).epsilon(0.03));

    // the sweep bottoms out at the true value
    SkewScenario with_skew = sc;
    with_skew.cfg.skew_ps = 0.5;
    const double at_truth = mean_cost(0.5, with_skew);
    for (double t : {-1.0, -0.5, 0.0, 1.0}) CHECK(at_truth < mean_cost(t, with_skew));

    // curvature grows with the notch center frequency
    double prev = 0.0;
    for (double nc : {5e9, 10e9, 20e9}) {
        SkewScenario s = sc;
        s.notch.center_hz = nc;
        const double d = mean_cost(-0.5, s) + mean_cost(0.5, s) - 2.0 * mean_cost(0.0, s);
        CHECK(d > prev);
        prev = d;
    }

    CHECK(validation_error_containing(
        [&] {
            SkewScenario s = sc;
            s.notch.kind = NotchKind::Dual;
            skew_cost(0.0, s);
        },
        "single notch"));
    CHECK(validation_error_containing(
        [&] {
            SkewScenario s = sc;
            CrosstalkProfile xt;
            xt.qi = {{0.0, cplx(0.0, 0.1)}};
            s.cfg.crosstalk = xt;
            skew_cost(0.0, s);
        },
        "crosstalk"));
}

TEST_CASE("skew cost: waveform scale cancels out") {
    SkewScenario sc;
    sc.wfm_org = source(52, 4096);
    sc.notch = NotchSpec{NotchKind::Single, 20e9, 2e9};
    sc.cfg.nfl_tx_db = -21.0;
    sc.cfg.ref_band = kBoi;
    sc.cfg.symbol_period_ps = kTsPs;
    sc.cfg.skew_ps = 0.4;
    sc.cfg.seed = 910;
    sc.resolution_bw = 150e6;

    SkewScenario scaled = sc;
    for (auto& v : scaled.wfm_org.pol_x) v *= 2.3;

    for (double t : {-0.4, 0.0, 0.4, 0.9})
        CHECK(skew_cost(t, sc) == doctest::Approx(skew_cost(t, scaled)).epsilon(1e-9));
}

TEST_CASE("estimate skew: recovers an off-grid truth from a noisy sweep") {
    SkewScenario sc;
    sc.wfm_org = source(53, 8192);
    sc.notch = NotchSpec{NotchKind::Single, 20e9, 2e9};
    sc.cfg.nfl_tx_db = -21.0;
    sc.cfg.ref_band = kBoi;
    sc.cfg.symbol_period_ps = kTsPs;
    sc.cfg.skew_ps = 0.75;
    sc.cfg.seed = 920;
    sc.resolution_bw = 150e6;

    const auto est = estimate_skew(sc, -1.4, 1.4, 0.25, 8, 4);
    CHECK(est.repeats.size() == 8);
    CHECK(est.cost_curve.size() == 12);
    CHECK(std::abs(est.tau_hat_ps - 0.75) <= 0.1);
    CHECK(est.std_ps < 0.2);
    for (double r : est.repeats) {
        CHECK(r >= -1.4);
        CHECK(r <= 1.4);
    }

    // byte-for-byte reproducible
    const auto again = estimate_skew(sc, -1.4, 1.4, 0.25, 8, 4);
    CHECK(again.repeats == est.repeats);
    CHECK(again.cost_curve == est.cost_curve);
    CHECK(again.std_ps == est.std_ps);
}

TEST_CASE("estimate skew: exact at zero without noise") {
    SkewScenario sc;
    sc.wfm_org = source(54, 4096);
    sc.notch = NotchSpec{NotchKind::Single, 20e9, 2e9};
    sc.cfg.ref_band = kBoi;
    sc.cfg.symbol_period_ps = kTsPs;
    sc.cfg.seed = 930;
    sc.resolution_bw = 150e6;

    // zero is not a sweep point, so this value comes from the parabola vertex.
    // The residual is the interference of the trial leak with the estimator
    // window's sidelobe pedestal, a few fs; well under the 250 fs step.
    const auto est = estimate_skew(sc, -1.4, 1.4, 0.25, 2, 1);
    CHECK(std::abs(est.tau_hat_ps) <= 0.01);
    // identical noiseless repeats spread not at all
    CHECK(est.std_ps == 0.0);

    const auto single = estimate_skew(sc, -1.4, 1.4, 0.25, 1, 1);
    CHECK(single.std_ps == 0.0);
    CHECK(single.repeats.size() == 1);
}

TEST_CASE("estimate skew: a periodic cost revival is flagged, not returned") {
    SkewScenario sc;
    sc.wfm_org = source(55, 2048);
    sc.notch = NotchSpec{NotchKind::Single, 20e9, 2e9};
    sc.cfg.ref_band = kBoi;
    sc.cfg.symbol_period_ps = kTsPs;
    sc.cfg.seed = 940;
    sc.resolution_bw = 150e6;

    // a trial advance of 1/center revives the null a second time
    CHECK(error_containing([&] { estimate_skew(sc, -5.0, 55.0, 5.0, 1, 1); },
                           ErrorKind::Numeric, "unimodal"));
}

TEST_CASE("single-notch leak under crosstalk follows the term sum") {
    auto w = source(71, 8192);
    const NotchSpec spec{NotchKind::Single, 15e9, 2e9};
    auto n = make_notched(w, spec);
    const std::size_t nn = w.size();

    // I-component spectrum of the notched waveform, ascending order
    cvec fi(nn);
    for (std::size_t i = 0; i < nn; ++i) fi[i] = cplx(n.wfm.pol_x[i].real(), 0.0);
    fft_forward_inplace(fi);

    ImpairmentConfig base;
    base.ref_band = kBoi;

    auto measured_apsd = [&](const CrosstalkProfile& xt) {
        ImpairmentConfig cfg = base;
        cfg.crosstalk = xt;
        auto t = simulate_capture(n.wfm, cfg, InterfaceStage::Card2OSA, 150e6);
        const BinRange r = interior_bins(t.spectrum.grid, n.null_band);
        REQUIRE(!r.empty());
        return apsd(t.spectrum, snapped_band_freqs(t.spectrum.grid, r));
    };
    auto predicted_apsd = [&](const CrosstalkProfile& xt, const Band& hz) {
        const auto qi = realize_crosstalk_term(xt.qi, n.tx_grid, cplx(0.0, 0.0));
        const auto iq = realize_crosstalk_term(xt.iq, n.tx_grid, cplx(0.0, 0.0));
        const BinRange bins = snap_band(n.tx_grid, hz);
        double acc = 0.0;
        for (std::size_t a = bins.lo; a < bins.hi; ++a)
            acc += std::norm(fi[fft_index(n.tx_grid, a)]) * std::norm(qi[a] + iq[a]);
        acc /= static_cast<double>(bins.count());
        return acc / (static_cast<double>(nn) * static_cast<double>(nn) * n.tx_grid.f_step);
    };

    // the compared band: interior of the emptied notch on the capture grid
    auto probe = simulate_capture(n.wfm, base, InterfaceStage::Card2OSA, 150e6);
    const Band hz = snapped_band_freqs(probe.spectrum.grid,
                                       interior_bins(probe.spectrum.grid, n.null_band));

    CrosstalkProfile flat;
    flat.qi = {{0.0, cplx(0.0, 0.1)}};
    flat.iq = {{0.0, cplx(0.0, 0.05)}};
    CrosstalkProfile tilted;
    tilted.qi = {{0.0, cplx(0.02, 0.03)}, {40e9, cplx(0.02, 0.12)}};
    tilted.iq = {{0.0, cplx(-0.01, 0.02)}};
    for (const auto& xt : {flat, tilted}) {
        const double m = measured_apsd(xt), p = predicted_apsd(xt, hz);
        CHECK(std::abs(db(m / p)) < 0.5);
    }

    // opposite terms cancel: the notch stays empty despite the crosstalk
    CrosstalkProfile opposed;
    opposed.qi = {{0.0, cplx(0.0, 0.08)}};
    opposed.iq = {{0.0, cplx(0.0, -0.08)}};
    CHECK(db(measured_apsd(opposed) / ref_density(w)) < -35.0);
}

TEST_CASE("dual-notch floor ignores crosstalk") {
    auto w = source(72, 8192);
    auto n = make_notched(w, NotchSpec{NotchKind::Dual, 15e9, 2e9});

    ImpairmentConfig cfg;
    cfg.nfl_tx_db = -21.0;
    cfg.ref_band = kBoi;
    cfg.seed = 777;

    auto interior_level = [&](const ImpairmentConfig& c) {
        auto t = simulate_capture(n.wfm, c, InterfaceStage::Card2OSA, 150e6);
        return apsd(t.spectrum,
                    snapped_band_freqs(t.spectrum.grid,
                                       interior_bins(t.spectrum.grid, n.null_band)));
    };

    const double plain = interior_level(cfg);
    ImpairmentConfig with_xt = cfg;
    CrosstalkProfile xt;
    xt.qi = {{0.0, cplx(0.0, 0.1)}};
    xt.iq = {{0.0, cplx(0.0, 0.05)}};
    with_xt.crosstalk = xt;
    CHECK(std::abs(db(interior_level(with_xt) / plain)) < 0.15);
}

TEST_CASE("sn/dn discrepancy flags crosstalk and stays blind to opposed terms") {
    auto w = source(81, 8192);
    ImpairmentConfig cfg;
    cfg.nfl_tx_db = -21.0;
    cfg.ref_band = kBoi;
    cfg.seed = 1000;

    const auto plan_sn = make_sweep_plan(kBoi, NotchKind::Single, 5e9);
    const auto plan_dn = make_sweep_plan(kBoi, NotchKind::Dual, 5e9);

    auto mean_delta = [&](const ImpairmentConfig& c) {
        const auto d = sn_dn_discrepancy(w, plan_sn, plan_dn, c, InterfaceStage::Card2OSA, 150e6, 2);
        double acc = 0.0;
        std::size_t used = 0;
        for (double v : d.delta_db)
            if (std::isfinite(v)) {
                acc += v;
                ++used;
            }
        REQUIRE(used > 500);
        return acc / static_cast<double>(used);
    };

    // floor only: the two topologies agree
    CHECK(std::abs(mean_delta(cfg)) < 0.3);

    // additive crosstalk terms: the single-notch floor rises, the dual stays
    ImpairmentConfig with_xt = cfg;
    CrosstalkProfile xt;
    xt.qi = {{0.0, cplx(0.0, 0.1)}};
    xt.iq = {{0.0, cplx(0.0, 0.05)}};
    with_xt.crosstalk = xt;
    CHECK(mean_delta(with_xt) > 1.5);

    // opposed terms are the topology's blind spot
    ImpairmentConfig opposed = cfg;
    CrosstalkProfile ox;
    ox.qi = {{0.0, cplx(0.0, 0.08)}};
    ox.iq = {{0.0, cplx(0.0, -0.08)}};
    opposed.crosstalk = ox;
    CHECK(std::abs(mean_delta(opposed)) < 0.3);

    CHECK(validation_error_containing(
        [&] {
            sn_dn_discrepancy(w, plan_dn, plan_dn, cfg, InterfaceStage::Card2OSA, 150e6, 1);
        },
        "single-notch sweep"));
    auto narrow = make_sweep_plan(Band{-20e9, 20e9}, NotchKind::Single, 5e9);
    CHECK(validation_error_containing(
        [&] {
            sn_dn_discrepancy(w, narrow, plan_dn, cfg, InterfaceStage::Card2OSA, 150e6, 1);
        },
        "different bands"));
}

TEST_CASE("eye closure fit recovers the generating line") {
    auto line = [](double ec, double nsr_trx, const std::vector<double>& xs) {
        std::vector<std::pair<double, double>> pts;
        for (double x : xs) pts.push_back({x, (x + nsr_trx) / ec});
        return pts;
    };

    const auto exact = eye_closure_fit(line(0.9, 0.01, {0.002, 0.005, 0.01, 0.02, 0.04}));
    CHECK(exact.ec == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(exact.nsr_trx == doctest::Approx(0.01).epsilon(1e-10));
    CHECK(exact.residual < 1e-12);

    const auto identity = eye_closure_fit(line(1.0, 0.0, {0.01, 0.02, 0.03}));
    CHECK(identity.ec == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(identity.nsr_trx) < 1e-12);

    // 1% multiplicative noise on 20 points still pins the slope
    std::vector<std::pair<double, double>> noisy;
    for (int i = 0; i < 20; ++i) {
        const double x = 0.001 * static_cast<double>(i + 1);
        const double u = static_cast<double>(mix64(static_cast<std::uint64_t>(i))) * 0x1.0p-64;
        noisy.push_back({x, (x + 0.015) / 0.85 * (1.0 + 0.01 * (2.0 * u - 1.0))});
    }
    const auto fit = eye_closure_fit(noisy);
    CHECK(fit.ec == doctest::Approx(0.85).epsilon(0.03));

    CHECK(validation_error_containing(
        [&] { eye_closure_fit({{0.01, 1.0}, {0.01, 2.0}}); }, "identical"));
    CHECK(validation_error_containing([&] { eye_closure_fit({{0.01, 1.0}}); }, "two points"));
    CHECK(error_containing(
        [&] { eye_closure_fit({{0.01, 0.9}, {0.02, 0.5}, {0.03, 0.1}}); },
        ErrorKind::Numeric, "slope"));
}
