#pragma once

#include "notchlab/impair.hpp"
#include "notchlab/perturb.hpp"

namespace notchlab {

// One simulated measurement: the PSD seen at the chosen interface plus the
// perturbation bookkeeping needed to use it in stitching. Band fields hold
// snapped frequencies from the transmit grid, so consumers on a coarser
// analysis grid can recover exactly which bins were attenuated.
struct MeasurementTrace {
    PowerSpectrum spectrum;
    NotchSpec notch;
    std::vector<Band> notched_bands;  // every band the filter attenuated
    Band primary_band{0.0, 0.0};      // snapped band at the requested center
    Band boi{0.0, 0.0};               // band of interest the sweep covers
    double norm = 1.0;
    bool normalized = true;
    InterfaceStage stage = InterfaceStage::Card2OSA;
    std::optional<ImpairmentConfig> truth;
};

// Mean spectral density (power per Hz) of one polarization over a band; the
// reference behind every dB-relative noise-floor level.
double mean_band_density(const ComplexWaveform& wfm, const Band& band, Pol pol = Pol::X);

// Push an instruction waveform through the impairment chain and measure its
// PSD at the requested interface. Order: crosstalk, skew, IQ gain imbalance,
// DAC quantization, transmit noise floor; Card2Card adds the receive floor.
// E2E takes the real electrical signal and reports a one-sided spectrum.
// Noise is reproducible from cfg.seed; floor levels are relative to the mean
// density of the given instruction over cfg.ref_band.
MeasurementTrace simulate_capture(const ComplexWaveform& wfm_instruction, const ImpairmentConfig& cfg,
                                  InterfaceStage stage, double resolution_bw);

}  // namespace notchlab
