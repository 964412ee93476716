#include "notchlab/stitch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>

#include "notchlab/perturb.hpp"
#include "notchlab/random.hpp"

namespace notchlab {

namespace {

std::string ghz(double f_hz) { return std::to_string(f_hz / 1e9) + " GHz"; }

// Rank of each entry in ascending (band center, width) order. Ties keep the
// incoming order. Ownership, partner pairing and capture seeds all key off
// this rank, which is what makes every output invariant under plan
// permutation.
std::vector<std::size_t> canonical_ranks(const std::vector<std::pair<double, double>>& keys) {
    std::vector<std::size_t> idx(keys.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
    std::vector<std::size_t> rank(keys.size());
    for (std::size_t r = 0; r < idx.size(); ++r) rank[idx[r]] = r;
    return rank;
}

std::vector<std::pair<double, double>> notch_keys(const std::vector<NotchSpec>& notches) {
    std::vector<std::pair<double, double>> keys;
    keys.reserve(notches.size());
    for (const auto& nspec : notches) keys.emplace_back(nspec.band().center(), nspec.width_hz);
    return keys;
}

}  // namespace

void StitchPlan::validate() const {
    boi.validate();
    if (notches.empty()) throw_validation("plan: no notches");
    for (const auto& nspec : notches) {
        nspec.validate();
        if (nspec.kind != kind) throw_validation("plan: notch kind differs from plan kind");
    }
}

StitchPlan make_sweep_plan(const Band& boi, NotchKind kind, double notch_width_hz) {
    boi.validate();
    if (!(notch_width_hz > 0.0)) throw_validation("plan: notch width must be > 0");
    StitchPlan plan;
    plan.boi = boi;
    plan.kind = kind;
    if (kind == NotchKind::Dual) {
        if (std::abs(boi.lo_hz + boi.hi_hz) > 1e-9 * boi.width())
            throw_validation("plan: dual sweep needs a band of interest symmetric about 0 Hz");
        const auto count = static_cast<std::size_t>(std::ceil(boi.hi_hz / notch_width_hz - 1e-9));
        for (std::size_t k = 0; k < count; ++k)
            plan.notches.push_back(
                NotchSpec{kind, (static_cast<double>(k) + 0.5) * notch_width_hz, notch_width_hz});
    } else {
        const auto count = static_cast<std::size_t>(std::ceil(boi.width() / notch_width_hz - 1e-9));
        for (std::size_t k = 0; k < count; ++k)
            plan.notches.push_back(
                NotchSpec{kind, boi.lo_hz + (static_cast<double>(k) + 0.5) * notch_width_hz,
                          notch_width_hz});
    }
    return plan;
}

std::vector<MeasurementTrace> run_plan(const StitchPlan& plan, const ComplexWaveform& wfm_org,
                                       const ImpairmentConfig& cfg, InterfaceStage stage,
                                       double resolution_bw, int n_avg, bool normalize) {
    plan.validate();
    wfm_org.validate();
    if (n_avg < 1) throw_validation("plan: capture average count must be >= 1");

    const FrequencyGrid grid = fft_grid(wfm_org.sample_rate, wfm_org.size());
    std::vector<PerturbationFilter> filters;
    filters.reserve(plan.notches.size());
    for (const auto& nspec : plan.notches) filters.push_back(build_filter(nspec, grid));

    // no two notches may share more than one bin
    for (std::size_t i = 0; i < filters.size(); ++i)
        for (std::size_t j = i + 1; j < filters.size(); ++j)
            for (const auto& ra : filters[i].regions)
                for (const auto& rb : filters[j].regions) {
                    const std::size_t lo = std::max(ra.bins.lo, rb.bins.lo);
                    const std::size_t hi = std::min(ra.bins.hi, rb.bins.hi);
                    if (hi > lo + 1)
                        throw_validation("plan: notches at " + ghz(plan.notches[i].center_hz) +
                                         " and " + ghz(plan.notches[j].center_hz) + " overlap by " +
                                         std::to_string(hi - lo) + " bins");
                }

    // Every bin of interest must fall inside some notch band. The one
    // exception is an isolated single-bin hole: a symmetric dual notch
    // snapped around 0 Hz cannot claim the center bin, and stitching
    // interpolates it instead.
    const BinRange boi_bins = snap_band(grid, plan.boi);
    if (boi_bins.empty()) throw_validation("plan: band of interest snaps to no grid bins");
    std::vector<char> covered(grid.n_bins, 0);
    for (const auto& f : filters)
        for (const auto& r : f.regions)
            std::fill(covered.begin() + static_cast<long>(r.bins.lo),
                      covered.begin() + static_cast<long>(r.bins.hi), char{1});
    std::size_t run_start = 0, run_len = 0;
    for (std::size_t b = boi_bins.lo; b <= boi_bins.hi; ++b) {
        if (b < boi_bins.hi && !covered[b]) {
            if (run_len == 0) run_start = b;
            ++run_len;
        } else if (run_len >= 2) {
            throw_validation("plan: band of interest not covered over [" + ghz(grid.freq(run_start)) +
                             ", " + ghz(grid.freq(run_start + run_len - 1)) + "] (" +
                             std::to_string(run_len) + " bins)");
        } else {
            run_len = 0;
        }
    }

    const auto rank = canonical_ranks(notch_keys(plan.notches));

    std::vector<MeasurementTrace> traces;
    traces.reserve(plan.notches.size());
    for (std::size_t i = 0; i < plan.notches.size(); ++i) {
        const PerturbResult pert = apply_perturbation(wfm_org, filters[i], normalize, plan.boi);

        MeasurementTrace trace;
        for (int c = 0; c < n_avg; ++c) {
            ImpairmentConfig run_cfg = cfg;
            run_cfg.seed = derive_seed(cfg.seed, 's', rank[i], static_cast<std::uint64_t>(c));
            MeasurementTrace cap = simulate_capture(pert.wfm, run_cfg, stage, resolution_bw);
            if (c == 0) {
                trace = std::move(cap);
            } else {
                for (std::size_t k = 0; k < trace.spectrum.psd.size(); ++k)
                    trace.spectrum.psd[k] += cap.spectrum.psd[k];
            }
        }
        if (n_avg > 1) {
            const double inv = 1.0 / static_cast<double>(n_avg);
            for (auto& v : trace.spectrum.psd) v *= inv;
        }

        trace.notch = plan.notches[i];
        trace.notched_bands.clear();
        for (const auto& r : filters[i].regions)
            trace.notched_bands.push_back(snapped_band_freqs(grid, r.bins));
        trace.primary_band = snapped_band_freqs(grid, filters[i].primary);
        trace.boi = plan.boi;
        trace.norm = pert.norm;
        trace.normalized = normalize;
        trace.truth = cfg;
        traces.push_back(std::move(trace));
    }
    return traces;
}

namespace {

// Traces resolved onto their common measurement grid: canonical order,
// per-bin ownership and the assembled floor, shared by stitch_nfl and
// recover_signal_psd.
struct Assembly {
    FrequencyGrid grid;
    double rbw = 0.0;
    BinRange boi_bins;
    std::vector<const MeasurementTrace*> traces;   // canonical order
    std::vector<std::vector<Band>> bands;          // recorded notched bands per trace
    std::vector<std::vector<BinRange>> claimed;    // bins fully inside those bands
    std::vector<std::vector<BinRange>> interior;   // claimed minus the edge guards
    std::vector<long> owner;                       // claiming trace per bin, -1 none
    std::vector<double> nfl;                       // floor value per bin, filled over boi
};

Assembly assemble(const std::vector<MeasurementTrace>& in) {
    if (in.empty()) throw_validation("stitch: no traces");
    Assembly a;
    a.grid = in[0].spectrum.grid;
    a.rbw = in[0].spectrum.resolution_bw;
    const Band boi = in[0].boi;
    for (const auto& t : in) {
        if (!(t.spectrum.grid == a.grid)) throw_validation("stitch: traces use different grids");
        if (t.spectrum.resolution_bw != a.rbw)
            throw_validation("stitch: traces use different resolution bandwidths");
        if (t.boi.lo_hz != boi.lo_hz || t.boi.hi_hz != boi.hi_hz)
            throw_validation("stitch: traces disagree on the band of interest");
        if (t.spectrum.psd.size() != a.grid.n_bins)
            throw_validation("stitch: trace spectrum length does not match its grid");
    }
    boi.validate();  // catches hand-built traces that never set the field
    a.boi_bins = snap_band(a.grid, boi);
    if (a.boi_bins.empty()) throw_validation("stitch: band of interest snaps to no bins");

    std::vector<std::pair<double, double>> keys;
    keys.reserve(in.size());
    for (const auto& t : in) keys.emplace_back(t.notch.band().center(), t.notch.width_hz);
    const auto rank = canonical_ranks(keys);
    a.traces.resize(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) a.traces[rank[i]] = &in[i];

    a.bands.resize(in.size());
    a.claimed.resize(in.size());
    a.interior.resize(in.size());
    for (std::size_t r = 0; r < a.traces.size(); ++r)
        for (const auto& band : a.traces[r]->notched_bands) {
            a.bands[r].push_back(band);
            const BinRange cl = inward_bins(a.grid, band);
            if (!cl.empty()) a.claimed[r].push_back(cl);
            const BinRange it = interior_bins(a.grid, band);
            if (!it.empty()) a.interior[r].push_back(it);
        }

    a.owner.assign(a.grid.n_bins, -1);
    for (std::size_t r = 0; r < a.claimed.size(); ++r)
        for (const auto& rg : a.claimed[r])
            for (std::size_t b = rg.lo; b < rg.hi; ++b)
                if (a.owner[b] < 0) a.owner[b] = static_cast<long>(r);

    // floor values come from the guarded interiors of the claimed ranges
    a.nfl.assign(a.grid.n_bins, 0.0);
    std::vector<char> have(a.grid.n_bins, 0);
    for (std::size_t r = 0; r < a.interior.size(); ++r)
        for (const auto& rg : a.interior[r])
            for (std::size_t b = rg.lo; b < rg.hi; ++b)
                if (a.owner[b] == static_cast<long>(r) && !have[b]) {
                    a.nfl[b] = a.traces[r]->spectrum.psd[b];
                    have[b] = 1;
                }

    // coverage audit: runs of unclaimed bins wider than one bin are plan gaps
    std::size_t run_start = 0, run_len = 0;
    for (std::size_t b = a.boi_bins.lo; b <= a.boi_bins.hi; ++b) {
        if (b < a.boi_bins.hi && a.owner[b] < 0) {
            if (run_len == 0) run_start = b;
            ++run_len;
        } else if (run_len >= 2) {
            throw_validation("stitch: no notch covers [" + ghz(a.grid.freq(run_start)) + ", " +
                             ghz(a.grid.freq(run_start + run_len - 1)) + "] (" +
                             std::to_string(run_len) + " bins)");
        } else {
            run_len = 0;
        }
    }

    // guard bins and lone unclaimed holes take the nearest measured value
    const std::size_t lo = a.boi_bins.lo, hi = a.boi_bins.hi;
    const std::size_t none = a.grid.n_bins;
    std::vector<std::size_t> prev(hi - lo, none), next(hi - lo, none);
    std::size_t last = none;
    for (std::size_t b = lo; b < hi; ++b) {
        if (have[b]) last = b;
        prev[b - lo] = last;
    }
    last = none;
    for (std::size_t b = hi; b-- > lo;) {
        if (have[b]) last = b;
        next[b - lo] = last;
    }
    for (std::size_t b = lo; b < hi; ++b) {
        if (have[b]) continue;
        const std::size_t p = prev[b - lo], nx = next[b - lo];
        if (p == none && nx == none)
            throw_numeric("stitch: no notch interior falls inside the band of interest");
        std::size_t pick;
        if (p == none) pick = nx;
        else if (nx == none) pick = p;
        else pick = (b - p <= nx - b) ? p : nx;
        a.nfl[b] = a.nfl[pick];
    }
    return a;
}

FrequencyGrid boi_grid(const Assembly& a) {
    return FrequencyGrid{a.grid.freq(a.boi_bins.lo), a.grid.f_step, a.boi_bins.count()};
}

}  // namespace

PowerSpectrum stitch_nfl(const std::vector<MeasurementTrace>& traces) {
    const Assembly a = assemble(traces);
    PowerSpectrum out;
    out.grid = boi_grid(a);
    out.resolution_bw = a.rbw;
    out.psd.assign(a.nfl.begin() + static_cast<long>(a.boi_bins.lo),
                   a.nfl.begin() + static_cast<long>(a.boi_bins.hi));
    return out;
}

RecoveredSignal recover_signal_psd(const std::vector<MeasurementTrace>& traces) {
    const Assembly a = assemble(traces);
    const long t_count = static_cast<long>(a.traces.size());

    RecoveredSignal out;
    out.psd.grid = boi_grid(a);
    out.psd.resolution_bw = a.rbw;
    out.psd.psd.resize(a.boi_bins.count());
    out.clamped.assign(a.boi_bins.count(), 0);

    const double margin = 2.0 * a.grid.f_step;
    for (std::size_t b = a.boi_bins.lo; b < a.boi_bins.hi; ++b) {
        // Partner: next notch in center order whose notched bands all keep two
        // bins of distance to this one. The margin matters: a trace read near
        // its own notch edge is biased low by the estimator's window mainlobe.
        const long start = (a.owner[b] >= 0) ? (a.owner[b] + 1) % t_count : 0;
        const double fb = a.grid.freq(b);
        long partner = -1;
        for (long s = 0; s < t_count && partner < 0; ++s) {
            const long cand = (start + s) % t_count;
            bool clear = true;
            for (const auto& band : a.bands[static_cast<std::size_t>(cand)])
                if (fb > band.lo_hz - margin && fb < band.hi_hz + margin) {
                    clear = false;
                    break;
                }
            if (clear) partner = cand;
        }
        if (partner < 0)
            throw_validation("recover: no trace leaves " + ghz(a.grid.freq(b)) + " un-notched");

        const MeasurementTrace& pt = *a.traces[static_cast<std::size_t>(partner)];
        double v = pt.spectrum.psd[b] - a.nfl[b];
        const std::size_t k = b - a.boi_bins.lo;
        if (v < 0.0) {
            v = 0.0;
            out.clamped[k] = 1;
            ++out.n_clamped;
        }
        out.psd.psd[k] = v * (pt.normalized ? pt.norm : 1.0);
    }
    return out;
}

SNDRProfile compute_sndr(const PowerSpectrum& signal, const PowerSpectrum& nfl) {
    if (!(signal.grid == nfl.grid)) throw_validation("sndr: signal and floor grids differ");
    if (signal.psd.size() != nfl.psd.size())
        throw_validation("sndr: signal and floor lengths differ");

    SNDRProfile p;
    p.grid = signal.grid;
    p.sndr_db.resize(signal.psd.size());
    p.nfl = nfl;
    p.signal = signal;
    for (std::size_t k = 0; k < signal.psd.size(); ++k) {
        const double s = signal.psd[k], f = nfl.psd[k];
        if (f > 0.0)
            p.sndr_db[k] = 10.0 * std::log10(s / f);
        else if (s > 0.0)
            p.sndr_db[k] = std::numeric_limits<double>::infinity();
        else
            p.sndr_db[k] = std::numeric_limits<double>::quiet_NaN();
    }
    return p;
}

SmallNotchReport small_notch_check(const std::vector<MeasurementTrace>& traces) {
    SmallNotchReport rep;
    for (const auto& t : traces) {
        rep.max_norm_deviation = std::max(rep.max_norm_deviation, std::abs(1.0 - t.norm));
        if (t.norm > 0.0)
            rep.worst_error_db = std::max(rep.worst_error_db, 10.0 * std::log10(1.0 / t.norm));
    }
    rep.approximation_unsafe = rep.worst_error_db > 0.5;
    return rep;
}

}  // namespace notchlab
