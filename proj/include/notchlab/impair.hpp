#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "notchlab/types.hpp"

namespace notchlab {

// Linear I/Q leakage, Eq-style 2x2 mixing per frequency:
//   I_out(f) = c_ii(f) I(f) + c_qi(f) Q(f)
//   Q_out(f) = c_iq(f) I(f) + c_qq(f) Q(f)
// Terms are given as control points on f >= 0, interpolated linearly onto the
// waveform grid and extended by conjugation to negative frequencies, so the
// realized response is Hermitian by construction and the mixed I/Q stay real.
struct CrosstalkProfile {
    using Points = std::vector<std::pair<double, cplx>>;  // (freq >= 0, value), ascending
    Points ii{{0.0, cplx(1.0, 0.0)}};
    Points qq{{0.0, cplx(1.0, 0.0)}};
    Points qi;  // Q leaking into I; empty = no leakage
    Points iq;  // I leaking into Q

    void validate() const;
    bool is_identity() const { return qi.empty() && iq.empty() && flat_unity(ii) && flat_unity(qq); }

private:
    static bool flat_unity(const Points& p);
};

// Per-bin realization of one crosstalk term on an FFT grid, ascending order.
std::vector<cplx> realize_crosstalk_term(const CrosstalkProfile::Points& points,
                                         const FrequencyGrid& grid, cplx empty_value);

// Fully realized response; the direct input for tests that need to probe
// symmetry violations.
struct CrosstalkResponse {
    FrequencyGrid grid;
    std::vector<cplx> ii, qq, qi, iq;  // ascending order, one value per bin
};

ComplexWaveform apply_iq_crosstalk(const ComplexWaveform& wfm, const CrosstalkProfile& profile);

// Throws a model error unless every term satisfies c(-f) = conj(c(f)).
ComplexWaveform apply_iq_crosstalk(const ComplexWaveform& wfm, const CrosstalkResponse& response);

// Delay the Q component by tau_ps relative to I (linear phase on the Q
// spectrum, circular semantics). The guard keeps |tau| under 10% of the
// symbol period; larger values are outside the fractional-delay model.
ComplexWaveform apply_skew(const ComplexWaveform& wfm, double tau_ps, double symbol_period_ps);

// Mid-rise quantization of I and Q over +/-full-scale, where full-scale is
// the largest |component| in the instruction. An all-zero waveform passes
// through unchanged.
ComplexWaveform quantize_dac(const ComplexWaveform& wfm, int bits);

// Spectral shaping for injected noise floors: piecewise-linear weight over
// signed frequency (flat beyond the end points) plus optional discrete
// spectral lines. Line power is relative to the signal power in the
// reference band.
struct NoiseShape {
    std::vector<std::pair<double, double>> points;  // (freq, linear weight >= 0)
    std::vector<std::pair<double, double>> lines;   // (freq, power dB rel. reference-band power)

    bool flat() const { return points.empty() && lines.empty(); }
    void validate() const;
    double weight_at(double freq) const;
};

enum class InterfaceStage { E2E, Card2OSA, Card2Card };

const char* to_string(InterfaceStage stage);

// Transceiver impairment set for one simulated capture. Every impairment is
// independently optional; a default-constructed config is a transparent
// chain. Noise floor levels are dB relative to the mean signal density of
// the instruction over ref_band, which must be set when a floor is enabled.
// symbol_period_ps anchors the skew guard and must be set alongside skew_ps.
struct ImpairmentConfig {
    std::optional<double> nfl_tx_db;
    std::optional<double> nfl_rx_db;
    std::optional<int> dac_bits;
    std::optional<double> skew_ps;
    std::optional<double> iq_gain_imbalance_db;
    std::optional<CrosstalkProfile> crosstalk;
    NoiseShape nfl_shape;

    Band ref_band{0.0, 0.0};
    double symbol_period_ps = 0.0;
    std::uint64_t seed = 0;
    Pol measure = Pol::X;

    void validate() const;
};

}  // namespace notchlab
