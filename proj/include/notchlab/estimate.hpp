#pragma once

#include <utility>
#include <vector>

#include "notchlab/stitch.hpp"

namespace notchlab {

// Average power spectral density over a band: the integral of the PSD across
// the region divided by the region width. With uniform bins this is the mean
// of the bin values.
double apsd(const PowerSpectrum& spectrum, const Band& region);

// Pure phase response acting on the Q component over a notch band and its
// mirror; unity gain everywhere and identity outside the two bands.
struct PhaseFilter {
    FrequencyGrid grid;  // full-length FFT grid of the target waveform
    NotchSpec notch;
    BinRange primary;           // the notch band, ascending-order bins
    BinRange mirror;            // its reflection about 0 Hz
    std::vector<double> theta;  // radians per bin, full grid length, 0 outside the bands
};

// theta(f) = 2*pi*f*tau_trial over the band pair: the linear phase of a trial
// skew. Applying the filter advances Q by tau_trial on those bands, the exact
// inverse of a channel that delays Q by the same amount.
PhaseFilter build_phase_filter(const NotchSpec& notch, const FrequencyGrid& grid,
                               double tau_trial_ps);

// Multiply the Q spectrum by exp(j*theta(f)); I is untouched. The band pair
// carries an odd phase, so Q stays a real signal.
ComplexWaveform apply_phase_filter(const ComplexWaveform& wfm, const PhaseFilter& filter);

// One skew-estimation setup: the unperturbed instruction, the single notch
// whose emptied band is monitored, the ground-truth impairments (cfg.skew_ps
// is the value under estimation), and the capture interface. Crosstalk must
// be absent or compensated before skew estimation; the runners reject
// configs that still carry it.
struct SkewScenario {
    ComplexWaveform wfm_org;
    NotchSpec notch;  // single-notch construction
    ImpairmentConfig cfg;
    InterfaceStage stage = InterfaceStage::Card2OSA;
    double resolution_bw = 0.0;
};

// Transmit the notched waveform with a trial advance on Q, capture, and
// return the monitored-band APSD in dB relative to the instruction's mean
// density over cfg.ref_band. The monitored band is the interior of the
// emptied notch band; the channel's Q delay cancels exactly at
// tau_trial = true skew, where the cost bottoms out at the noise floor.
// Deterministic given cfg.seed.
double skew_cost(double tau_trial_ps, const SkewScenario& sc);

struct SkewEstimate {
    double tau_hat_ps = 0.0;  // mean over repeats, inside the sweep range
    std::vector<std::pair<double, double>> cost_curve;  // (tau_trial ps, cost dB), mean over repeats
    std::vector<double> repeats;  // per-repeat refined estimates, ps
    double std_ps = 0.0;          // sample std over repeats; 0 for a single repeat
};

// Sweep the trial advance over sweep_lo + k*step up to sweep_hi, each point
// averaged over n_traces_avg captures. Captures reuse one noise realization
// per (repeat, capture index) across the whole sweep, so the curve shape is
// not distorted by independent noise draws. The minimum grid point and its
// two neighbours get a parabola fit on the linear costs for sub-step
// refinement; the procedure repeats n_repeats times on fresh noise.
// A curve with more than one strict local minimum raises a numeric error
// carrying the curve.
SkewEstimate estimate_skew(const SkewScenario& sc, double sweep_lo_ps, double sweep_hi_ps,
                           double step_ps, int n_repeats, int n_traces_avg);

// Frequency-resolved SNDR measured two ways over the same band of interest.
// Dual-notch bands null I and Q outright, so their floor ignores any linear
// I/Q mixing; a single notch relies on destructive addition that mixing
// breaks. Positive delta flags uncompensated crosstalk-family impairments.
struct SnDnDiscrepancy {
    FrequencyGrid grid;
    std::vector<double> delta_db;  // dual minus single per bin; NaN where either side is undefined
    SNDRProfile single_notch;
    SNDRProfile dual_notch;
};

SnDnDiscrepancy sn_dn_discrepancy(const ComplexWaveform& wfm_org, const StitchPlan& plan_sn,
                                  const StitchPlan& plan_dn, const ImpairmentConfig& cfg,
                                  InterfaceStage stage, double resolution_bw, int n_avg = 1);

struct EyeClosureFit {
    double ec = 0.0;        // eye closure, reciprocal of the fitted slope
    double nsr_trx = 0.0;   // transceiver noise-to-signal ratio, intercept/slope
    double residual = 0.0;  // rms residual of the fit
};

// Least-squares line through (nsr_ase, nsr_rx) points under the model
// nsr_rx = (nsr_ase + nsr_trx) / ec. Needs at least two distinct loadings;
// a non-positive fitted slope leaves the eye closure undefined and raises a
// numeric error.
EyeClosureFit eye_closure_fit(const std::vector<std::pair<double, double>>& points);

}  // namespace notchlab
