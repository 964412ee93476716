#pragma once

#include <cstdint>
#include <vector>

#include "notchlab/capture.hpp"

namespace notchlab {

// A notch sweep: one capture per notch, bands jointly covering the band of
// interest. For a dual plan the mirror bands count toward coverage, so the
// notches themselves only need to tile the positive half.
struct StitchPlan {
    Band boi{0.0, 0.0};
    std::vector<NotchSpec> notches;
    NotchKind kind = NotchKind::Dual;

    // Shape checks only; geometric coverage needs a grid and happens in
    // run_plan.
    void validate() const;
};

// Contiguous equal-width sweep over the band of interest. Dual plans demand a
// symmetric boi and tile [0, hi]; single plans tile [lo, hi]. The last notch
// may overhang the boi edge by less than one width.
StitchPlan make_sweep_plan(const Band& boi, NotchKind kind, double notch_width_hz);

// Run every notch through perturbation and capture. Each trace's spectrum is
// the mean over n_avg independent captures. Noise seeds derive from cfg.seed,
// the notch's rank in center-frequency order and the capture index, so
// reordering the plan cannot change any output.
std::vector<MeasurementTrace> run_plan(const StitchPlan& plan, const ComplexWaveform& wfm_org,
                                       const ImpairmentConfig& cfg, InterfaceStage stage,
                                       double resolution_bw, int n_avg = 1, bool normalize = true);

// Noise floor over the band of interest, assembled bin by bin from whichever
// trace notched that bin. Floor values are read only from bins whose centers
// keep two bins of distance to the recorded notch edges: the estimator window
// leaks signal across anything closer, so the edge bin plus one guard bin are
// dropped. Guard bins and the lone bin a symmetric dual notch cannot claim
// around 0 Hz take the nearest measured value. The result lives on the boi
// sub-grid of the trace spectra.
PowerSpectrum stitch_nfl(const std::vector<MeasurementTrace>& traces);

struct RecoveredSignal {
    PowerSpectrum psd;
    std::vector<std::uint8_t> clamped;  // 1 where a negative difference was clamped to 0
    std::size_t n_clamped = 0;
};

// Clean signal spectrum: per bin, an un-notched partner trace minus the
// stitched floor, scaled back by the partner's norm when the capture was
// normalized. The partner is the next notch in center order whose notched
// bands all stay at least two bins away from the bin being read.
RecoveredSignal recover_signal_psd(const std::vector<MeasurementTrace>& traces);

struct SNDRProfile {
    FrequencyGrid grid;
    std::vector<double> sndr_db;  // +inf where the floor is 0, NaN where both are 0
    PowerSpectrum nfl;
    PowerSpectrum signal;
};

SNDRProfile compute_sndr(const PowerSpectrum& signal, const PowerSpectrum& nfl);

// How far the captures sit from the small-notch regime where the norm factor
// could have been skipped. The toolkit always applies the factor; this only
// reports the error that skipping it would have caused.
struct SmallNotchReport {
    double max_norm_deviation = 0.0;  // max |1 - norm| across traces
    double worst_error_db = 0.0;      // largest 10*log10(1/norm)
    bool approximation_unsafe = false;  // worst error above 0.5 dB
};

SmallNotchReport small_notch_check(const std::vector<MeasurementTrace>& traces);

}  // namespace notchlab
