#pragma once

#include <limits>
#include <vector>

#include "notchlab/types.hpp"

namespace notchlab {

enum class NotchKind { Single, Dual };

// Rectangular spectral notch request. A dual notch attenuates the band around
// +|center| and its mirror around -|center|; a single notch attenuates only
// the band around the signed center, leaving the mirror band untouched.
struct NotchSpec {
    NotchKind kind = NotchKind::Dual;
    double center_hz = 0.0;  // band center
    double width_hz = 0.0;   // band width, > 0
    double gain_db = -std::numeric_limits<double>::infinity();  // in-band amplitude gain; -inf zeroes the band

    void validate() const {
        if (!(width_hz > 0.0)) throw_validation("notch: width must be > 0");
        if (kind == NotchKind::Dual && !(std::abs(center_hz) - width_hz / 2.0 >= 0.0))
            throw_validation("notch: dual band would straddle 0 Hz");
        if (gain_db > 0.0) throw_validation("notch: gain above 0 dB is not an attenuation");
    }

    Band band() const {
        const double c = (kind == NotchKind::Dual) ? std::abs(center_hz) : center_hz;
        return Band{c - width_hz / 2.0, c + width_hz / 2.0};
    }
};

struct FilterRegion {
    BinRange bins;
    double amp_gain = 1.0;  // linear amplitude, applied to the spectrum
};

// NotchSpec resolved onto the transform grid of a concrete waveform. Gain is
// exactly 1 outside all regions; a fully attenuating notch stores exact 0.
struct PerturbationFilter {
    FrequencyGrid grid;            // full-length FFT grid of the target waveform
    NotchSpec spec;
    std::vector<FilterRegion> regions;  // attenuated bands, ascending-order bins
    BinRange primary;              // snapped band at the requested center
    BinRange mirror;               // reflection of primary (attenuated only for dual)

    double gain_at(std::size_t bin) const {
        for (const auto& r : regions)
            if (r.bins.contains(bin)) return r.amp_gain;
        return 1.0;
    }
};

PerturbationFilter build_filter(const NotchSpec& spec, const FrequencyGrid& grid);

struct PerturbResult {
    ComplexWaveform wfm;
    double norm = 1.0;  // band-of-interest power ratio perturbed / original
};

// Retained power fraction over the band of interest if the filter were
// applied, without synthesizing the waveform.
double normalization_factor(const ComplexWaveform& wfm, const PerturbationFilter& filter,
                            const Band& boi);

// Filter the waveform through the full-length transform (circular
// convolution semantics). With normalize set, the result is rescaled by
// 1/sqrt(norm) so total band-of-interest power matches the original.
PerturbResult apply_perturbation(const ComplexWaveform& wfm, const PerturbationFilter& filter,
                                 bool normalize, const Band& boi);

}  // namespace notchlab
