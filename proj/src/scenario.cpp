#include "notchlab/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "notchlab/estimate.hpp"
#include "notchlab/keyfile.hpp"
#include "notchlab/signal.hpp"

namespace notchlab {

const char* to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::Stitch: return "stitch";
        case ScenarioKind::Skew: return "skew";
        case ScenarioKind::Xtalk: return "xtalk";
        case ScenarioKind::Psd: return "psd";
    }
    return "?";
}

Band Scenario::occupied_band() const {
    const double half = (1.0 + rolloff) * baud_hz / 2.0;
    return Band{-half, half};
}

Band Scenario::effective_boi() const {
    return (boi.hi_hz > boi.lo_hz) ? boi : occupied_band();
}

ComplexWaveform Scenario::make_waveform() const {
    return generate_rrc_qpsk(baud_hz, rolloff, n_symbols, oversampling, seed);
}

StitchPlan Scenario::make_plan(NotchKind kind) const {
    return make_sweep_plan(effective_boi(), kind, notch_width_hz);
}

namespace {

// "f:v,f:v,..." -> pairs of doubles; used for floor shapes and lines.
std::vector<std::pair<double, double>> parse_pair_list(KeyFile& kf, const std::string& key,
                                                      const std::string& raw) {
    std::vector<std::pair<double, double>> out;
    for (const auto& piece : split_list(raw, ',')) {
        const auto parts = split_list(piece, ':');
        if (parts.size() != 2) kf.fail(key, "expected 'freq:value' entries, got '" + piece + "'");
        const auto f = parse_double(parts[0]);
        const auto v = parse_double(parts[1]);
        if (!f || !v) kf.fail(key, "malformed number in '" + piece + "'");
        out.push_back({*f, *v});
    }
    return out;
}

// "f:re:im,..." -> complex control points for one crosstalk term.
CrosstalkProfile::Points parse_cplx_list(KeyFile& kf, const std::string& key,
                                         const std::string& raw) {
    CrosstalkProfile::Points out;
    for (const auto& piece : split_list(raw, ',')) {
        const auto parts = split_list(piece, ':');
        if (parts.size() != 3) kf.fail(key, "expected 'freq:re:im' entries, got '" + piece + "'");
        const auto f = parse_double(parts[0]);
        const auto re = parse_double(parts[1]);
        const auto im = parse_double(parts[2]);
        if (!f || !re || !im) kf.fail(key, "malformed number in '" + piece + "'");
        out.push_back({*f, cplx(*re, *im)});
    }
    return out;
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin) {
    KeyFile kf = KeyFile::parse(text, origin);
    Scenario sc;
    sc.name = origin;
    std::vector<std::string> bad;  // constraint violations, reported together

    if (auto v = kf.take("kind")) {
        if (*v == "stitch") sc.kind = ScenarioKind::Stitch;
        else if (*v == "skew") sc.kind = ScenarioKind::Skew;
        else if (*v == "xtalk") sc.kind = ScenarioKind::Xtalk;
        else if (*v == "psd") sc.kind = ScenarioKind::Psd;
        else kf.fail("kind", "expected stitch|skew|xtalk|psd, got '" + *v + "'");
    }
    if (auto v = kf.take("stage")) {
        if (*v == "e2e") sc.stage = InterfaceStage::E2E;
        else if (*v == "card2osa") sc.stage = InterfaceStage::Card2OSA;
        else if (*v == "card2card") sc.stage = InterfaceStage::Card2Card;
        else kf.fail("stage", "expected e2e|card2osa|card2card, got '" + *v + "'");
    }
    if (auto v = kf.take("plan.kind")) {
        if (*v == "single") sc.plan_kind = NotchKind::Single;
        else if (*v == "dual") sc.plan_kind = NotchKind::Dual;
        else kf.fail("plan.kind", "expected single|dual, got '" + *v + "'");
    }

    if (auto v = kf.take_double("baud_hz")) sc.baud_hz = *v;
    if (auto v = kf.take_double("rolloff")) sc.rolloff = *v;
    if (auto v = kf.take_uint("n_symbols")) sc.n_symbols = static_cast<std::size_t>(*v);
    if (auto v = kf.take_uint("oversampling")) sc.oversampling = static_cast<std::size_t>(*v);
    if (auto v = kf.take_uint("seed")) sc.seed = *v;
    if (auto v = kf.take_double("rbw_hz")) sc.rbw_hz = *v;
    if (auto v = kf.take_int("captures")) sc.captures = static_cast<int>(*v);

    const auto boi_lo = kf.take_double("boi.lo_hz");
    const auto boi_hi = kf.take_double("boi.hi_hz");
    if (boi_lo.has_value() != boi_hi.has_value())
        bad.push_back("boi.lo_hz and boi.hi_hz must be given together");
    if (boi_lo && boi_hi) sc.boi = Band{*boi_lo, *boi_hi};

    if (auto v = kf.take_double("plan.notch_width_hz")) sc.notch_width_hz = *v;

    if (auto v = kf.take_double("skew.sweep_lo_ps")) sc.skew.sweep_lo_ps = *v;
    if (auto v = kf.take_double("skew.sweep_hi_ps")) sc.skew.sweep_hi_ps = *v;
    if (auto v = kf.take_double("skew.step_ps")) sc.skew.step_ps = *v;
    if (auto v = kf.take_int("skew.repeats")) sc.skew.repeats = static_cast<int>(*v);
    if (auto v = kf.take_double("skew.notch_center_hz")) sc.skew.notch_center_hz = *v;
    if (auto v = kf.take_double("skew.notch_width_hz")) sc.skew.notch_width_hz = *v;

    if (auto v = kf.take_double("impair.nfl_tx_db")) sc.impair.nfl_tx_db = *v;
    if (auto v = kf.take_double("impair.nfl_rx_db")) sc.impair.nfl_rx_db = *v;
    if (auto v = kf.take_int("impair.dac_bits")) sc.impair.dac_bits = static_cast<int>(*v);
    if (auto v = kf.take_double("impair.skew_ps")) sc.impair.skew_ps = *v;
    if (auto v = kf.take_double("impair.iq_gain_imbalance_db")) sc.impair.iq_gain_imbalance_db = *v;
    if (auto v = kf.take("impair.nfl_shape.points"))
        sc.impair.nfl_shape.points = parse_pair_list(kf, "impair.nfl_shape.points", *v);
    if (auto v = kf.take("impair.nfl_shape.lines"))
        sc.impair.nfl_shape.lines = parse_pair_list(kf, "impair.nfl_shape.lines", *v);

    CrosstalkProfile xt;
    bool any_xt = false;
    for (const char* term : {"ii", "qq", "qi", "iq"}) {
        const std::string key = std::string("impair.xtalk.") + term;
        if (auto v = kf.take(key)) {
            auto pts = parse_cplx_list(kf, key, *v);
            if (term[0] == 'i' && term[1] == 'i') xt.ii = std::move(pts);
            else if (term[0] == 'q' && term[1] == 'q') xt.qq = std::move(pts);
            else if (term[0] == 'q') xt.qi = std::move(pts);
            else xt.iq = std::move(pts);
            any_xt = true;
        }
    }
    if (any_xt) sc.impair.crosstalk = xt;

    kf.reject_leftovers();

    // -- constraint checks; everything wrong is reported in one pass --
    if (!(sc.baud_hz > 0.0)) bad.push_back("baud_hz must be > 0");
    if (!(sc.rolloff >= 0.0 && sc.rolloff < 1.0)) bad.push_back("rolloff must be in [0, 1)");
    if (sc.n_symbols < 64) bad.push_back("n_symbols must be >= 64");
    if (sc.baud_hz > 0.0 &&
        static_cast<double>(sc.oversampling) < 2.0 * (1.0 + sc.rolloff))
        bad.push_back("oversampling must be >= 2*(1+rolloff)");
    if (!(sc.rbw_hz > 0.0)) bad.push_back("rbw_hz must be > 0");
    if (sc.captures < 1) bad.push_back("captures must be >= 1");
    if (boi_lo && boi_hi && !(*boi_lo < *boi_hi)) bad.push_back("boi.lo_hz must be below boi.hi_hz");
    if (!(sc.notch_width_hz > 0.0)) bad.push_back("plan.notch_width_hz must be > 0");
    if (sc.impair.dac_bits && *sc.impair.dac_bits < 1) bad.push_back("impair.dac_bits must be >= 1");
    if (sc.kind == ScenarioKind::Skew) {
        if (!(sc.skew.step_ps > 0.0)) bad.push_back("skew.step_ps must be > 0");
        if (!(sc.skew.sweep_lo_ps < sc.skew.sweep_hi_ps))
            bad.push_back("skew.sweep_lo_ps must be below skew.sweep_hi_ps");
        if (sc.skew.repeats < 1) bad.push_back("skew.repeats must be >= 1");
        if (!(sc.skew.notch_width_hz > 0.0)) bad.push_back("skew.notch_width_hz must be > 0");
    }

    try {
        sc.impair.nfl_shape.validate();
    } catch (const Error& e) {
        bad.push_back(e.what());
    }
    if (sc.impair.crosstalk) {
        try {
            sc.impair.crosstalk->validate();
        } catch (const Error& e) {
            bad.push_back(e.what());
        }
    }

    // derived anchors for the impairment chain
    sc.impair.seed = sc.seed;
    sc.impair.ref_band = sc.effective_boi();
    if (sc.baud_hz > 0.0) sc.impair.symbol_period_ps = 1e12 / sc.baud_hz;

    // notch geometry is checked against the transmit grid now, so a bad plan
    // names its notch here instead of dying mid-run
    if (bad.empty()) {
        const FrequencyGrid grid =
            fft_grid(sc.baud_hz * static_cast<double>(sc.oversampling),
                     sc.n_symbols * sc.oversampling);
        auto check_plan = [&](NotchKind kind) {
            try {
                const StitchPlan plan = sc.make_plan(kind);
                for (std::size_t i = 0; i < plan.notches.size(); ++i) {
                    try {
                        build_filter(plan.notches[i], grid);
                    } catch (const Error& e) {
                        bad.push_back("plan notch " + std::to_string(i) + ": " + e.what());
                    }
                }
            } catch (const Error& e) {
                bad.push_back(std::string("plan: ") + e.what());
            }
        };
        if (sc.kind == ScenarioKind::Stitch) check_plan(sc.plan_kind);
        if (sc.kind == ScenarioKind::Xtalk) {
            check_plan(NotchKind::Single);
            check_plan(NotchKind::Dual);
        }
        if (sc.kind == ScenarioKind::Skew) {
            try {
                const NotchSpec spec{NotchKind::Single, sc.skew.notch_center_hz,
                                     sc.skew.notch_width_hz};
                build_phase_filter(spec, grid, 0.0);
            } catch (const Error& e) {
                bad.push_back(std::string("skew notch: ") + e.what());
            }
        }
    }

    if (!bad.empty()) {
        std::string msg = origin + ": " + std::to_string(bad.size()) + " constraint" +
                          (bad.size() > 1 ? "s" : "") + " violated: ";
        for (std::size_t i = 0; i < bad.size(); ++i) {
            if (i) msg += "; ";
            msg += bad[i];
        }
        throw_validation(msg);
    }
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_io("cannot open scenario file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw_io("failed reading scenario file '" + path + "'");
    Scenario sc = parse_scenario(buf.str(), path);
    sc.name = std::filesystem::path(path).stem().string();
    return sc;
}

}  // namespace notchlab
