#pragma once

#include <cstdint>

#include "notchlab/types.hpp"

namespace notchlab {

// Root-raised-cosine shaped QPSK at unit mean power per polarization.
//
// Data symbols come from a counter-based generator, so waveform content is a
// pure function of (seed, polarization, symbol index). The pulse shaping
// filter is truncated at +/-32 symbols and applied circularly over the full
// length; the waveform has no start-up transient and its spectrum is exactly
// the shaped symbol spectrum.
//
// oversampling is the integer samples-per-symbol factor and must satisfy
// oversampling >= 2*(1+rolloff) to keep the shaped band inside the grid with
// margin for perturbation work.
ComplexWaveform generate_rrc_qpsk(double baud, double rolloff, std::size_t n_symbols,
                                  std::size_t oversampling, std::uint64_t seed,
                                  bool dual_pol = false);

// max |sample| / rms over all populated polarizations.
double peak_to_rms(const ComplexWaveform& wfm);

// RRC impulse response at t symbol periods from the pulse center.
double rrc_tap(double t, double rolloff);

}  // namespace notchlab
