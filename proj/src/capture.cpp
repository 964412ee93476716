#include "notchlab/capture.hpp"

#include <cmath>
#include <numbers>

#include "notchlab/fft.hpp"
#include "notchlab/psd.hpp"
#include "notchlab/random.hpp"

namespace notchlab {

namespace {

// Mean spectral density (power per Hz) of one polarization over a band.
double mean_density(const std::vector<cplx>& pol, double fs, const Band& band) {
    const std::size_t n = pol.size();
    const FrequencyGrid grid = fft_grid(fs, n);
    const BinRange bins = snap_band(grid, band);
    if (bins.empty()) throw_validation("capture: ref_band snaps to no grid bins");
    cvec spec = fft_forward(pol);
    double power = 0.0;
    for (std::size_t a = bins.lo; a < bins.hi; ++a) power += std::norm(spec[fft_index(grid, a)]);
    power /= static_cast<double>(n) * static_cast<double>(n);
    const double bw = static_cast<double>(bins.count()) * grid.f_step;
    return power / bw;
}

void add_floor_one_pol(std::vector<cplx>& pol, double fs, double level_db, const NoiseShape& shape,
                       double ref_density, double ref_power, std::uint64_t seed) {
    const std::size_t n = pol.size();
    const double target = std::pow(10.0, level_db / 10.0) * ref_density;  // power per Hz
    GaussianGen gen(seed);

    if (shape.points.empty()) {
        // white floor: per-sample complex variance is density * rate
        const double sigma = std::sqrt(target * fs / 2.0);
        for (auto& v : pol) v += cplx(sigma * gen(), sigma * gen());
    } else {
        // colored floor synthesized in the frequency domain
        const FrequencyGrid grid = fft_grid(fs, n);
        cvec spec(n);
        for (std::size_t a = 0; a < n; ++a) {
            const double density = target * shape.weight_at(grid.freq(a));
            const double amp = std::sqrt(density * fs * static_cast<double>(n) / 2.0);
            spec[fft_index(grid, a)] = cplx(amp * gen(), amp * gen());
        }
        fft_inverse_inplace(spec);
        for (std::size_t i = 0; i < n; ++i) pol[i] += spec[i];
    }

    for (const auto& [f_line, db] : shape.lines) {
        const double amp = std::sqrt(std::pow(10.0, db / 10.0) * ref_power);
        const double phi = 2.0 * std::numbers::pi * gen.uniform01();
        const double w = 2.0 * std::numbers::pi * f_line / fs;
        for (std::size_t i = 0; i < n; ++i) {
            const double arg = w * static_cast<double>(i) + phi;
            pol[i] += cplx(amp * std::cos(arg), amp * std::sin(arg));
        }
    }
}

void add_floor(ComplexWaveform& chain, const ComplexWaveform& instruction, double level_db,
               const NoiseShape& shape, const Band& ref_band, std::uint64_t seed) {
    const double fs = chain.sample_rate;
    {
        const double density = mean_density(instruction.pol_x, fs, ref_band);
        const BinRange bins = snap_band(fft_grid(fs, instruction.size()), ref_band);
        const double power = density * static_cast<double>(bins.count()) * fs / static_cast<double>(instruction.size());
        add_floor_one_pol(chain.pol_x, fs, level_db, shape, density, power, derive_seed(seed, 'x'));
    }
    if (chain.dual_pol()) {
        const double density = mean_density(instruction.pol_y, fs, ref_band);
        const BinRange bins = snap_band(fft_grid(fs, instruction.size()), ref_band);
        const double power = density * static_cast<double>(bins.count()) * fs / static_cast<double>(instruction.size());
        add_floor_one_pol(chain.pol_y, fs, level_db, shape, density, power, derive_seed(seed, 'y'));
    }
}

}  // namespace

double mean_band_density(const ComplexWaveform& wfm, const Band& band, Pol pol) {
    wfm.validate();
    if (pol == Pol::Y && !wfm.dual_pol())
        throw_validation("capture: waveform has no Y polarization");
    return mean_density(pol == Pol::X ? wfm.pol_x : wfm.pol_y, wfm.sample_rate, band);
}

MeasurementTrace simulate_capture(const ComplexWaveform& wfm_instruction, const ImpairmentConfig& cfg,
                                  InterfaceStage stage, double resolution_bw) {
    wfm_instruction.validate();
    cfg.validate();

    ComplexWaveform chain = wfm_instruction;

    if (cfg.crosstalk && !cfg.crosstalk->is_identity())
        chain = apply_iq_crosstalk(chain, *cfg.crosstalk);

    if (cfg.skew_ps && *cfg.skew_ps != 0.0)
        chain = apply_skew(chain, *cfg.skew_ps, cfg.symbol_period_ps);

    if (cfg.iq_gain_imbalance_db && *cfg.iq_gain_imbalance_db != 0.0) {
        const double g = std::pow(10.0, *cfg.iq_gain_imbalance_db / 20.0);
        for (auto& v : chain.pol_x) v = cplx(v.real(), g * v.imag());
        for (auto& v : chain.pol_y) v = cplx(v.real(), g * v.imag());
    }

    if (cfg.dac_bits) chain = quantize_dac(chain, *cfg.dac_bits);

    if (cfg.nfl_tx_db)
        add_floor(chain, wfm_instruction, *cfg.nfl_tx_db, cfg.nfl_shape, cfg.ref_band,
                  derive_seed(cfg.seed, 't'));
    if (stage == InterfaceStage::Card2Card && cfg.nfl_rx_db)
        add_floor(chain, wfm_instruction, *cfg.nfl_rx_db, cfg.nfl_shape, cfg.ref_band,
                  derive_seed(cfg.seed, 'r'));

    MeasurementTrace trace;
    trace.stage = stage;
    trace.truth = cfg;

    if (stage == InterfaceStage::E2E) {
        ComplexWaveform real_part;
        real_part.sample_rate = chain.sample_rate;
        const auto& src = (cfg.measure == Pol::Y) ? chain.pol_y : chain.pol_x;
        if (src.empty()) throw_validation("capture: requested polarization is absent");
        real_part.pol_x.resize(src.size());
        for (std::size_t i = 0; i < src.size(); ++i) real_part.pol_x[i] = cplx(src[i].real(), 0.0);
        trace.spectrum = fold_one_sided(estimate_psd(real_part, resolution_bw, Pol::X));
    } else {
        trace.spectrum = estimate_psd(chain, resolution_bw, cfg.measure);
    }
    return trace;
}

}  // namespace notchlab
