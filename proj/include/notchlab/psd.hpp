#pragma once

#include "notchlab/types.hpp"

namespace notchlab {

// Averaged modified periodogram (Hann window, 50% overlap). The segment
// length is the smallest power of two whose bin spacing is at or below
// resolution_bw; spacing coarser than requested raises a resolution error,
// as does a segment longer than the waveform.
//
// Scaled so that the integral of the PSD over the grid equals the mean
// power of the selected polarization, up to window edge effects.
PowerSpectrum estimate_psd(const ComplexWaveform& wfm, double resolution_bw, Pol pol = Pol::X);

// Segment length the estimator will use for a given rate and resolution.
std::size_t psd_segment_length(double sample_rate, double resolution_bw);

// Collapse a symmetric two-sided spectrum of a real signal onto positive
// frequencies; bin powers at +/-f are summed.
PowerSpectrum fold_one_sided(const PowerSpectrum& two_sided);

}  // namespace notchlab
