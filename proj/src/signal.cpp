#include "notchlab/signal.hpp"

#include <cmath>
#include <numbers>

#include "notchlab/fft.hpp"
#include "notchlab/random.hpp"

namespace notchlab {

double rrc_tap(double t, double rolloff) {
    constexpr double pi = std::numbers::pi;
    const double b = rolloff;
    if (t == 0.0) return 1.0 - b + 4.0 * b / pi;
    if (b > 0.0) {
        const double singular = 1.0 / (4.0 * b);
        if (std::abs(std::abs(t) - singular) < 1e-12) {
            return (b / std::sqrt(2.0)) * ((1.0 + 2.0 / pi) * std::sin(pi / (4.0 * b)) +
                                           (1.0 - 2.0 / pi) * std::cos(pi / (4.0 * b)));
        }
    }
    const double num = std::sin(pi * t * (1.0 - b)) + 4.0 * b * t * std::cos(pi * t * (1.0 + b));
    const double den = pi * t * (1.0 - 16.0 * b * b * t * t);
    return num / den;
}

namespace {

constexpr std::size_t kFilterHalfSymbols = 32;

// One QPSK symbol per counter value, amplitude 1.
cplx qpsk_symbol(std::uint64_t stream, std::uint64_t k) {
    const std::uint64_t u = mix64(stream + k);
    const double re = (u & 1u) ? 1.0 : -1.0;
    const double im = (u & 2u) ? 1.0 : -1.0;
    return cplx(re, im) / std::sqrt(2.0);
}

std::vector<cplx> shape_one_pol(std::uint64_t stream, std::size_t n_symbols, std::size_t sps,
                                const cvec& taps_spectrum) {
    const std::size_t n = n_symbols * sps;
    cvec x(n, cplx(0.0, 0.0));
    for (std::size_t k = 0; k < n_symbols; ++k) x[k * sps] = qpsk_symbol(stream, k);
    fft_forward_inplace(x);
    for (std::size_t j = 0; j < n; ++j) x[j] *= taps_spectrum[j];
    fft_inverse_inplace(x);

    double acc = 0.0;
    for (const auto& v : x) acc += std::norm(v);
    const double scale = 1.0 / std::sqrt(acc / static_cast<double>(n));
    for (auto& v : x) v *= scale;
    return x;
}

}  // namespace

ComplexWaveform generate_rrc_qpsk(double baud, double rolloff, std::size_t n_symbols,
                                  std::size_t oversampling, std::uint64_t seed, bool dual_pol) {
    if (!(baud > 0.0)) throw_validation("generate: baud must be > 0");
    if (rolloff < 0.0 || rolloff > 1.0) throw_validation("generate: rolloff must be in [0, 1]");
    if (n_symbols < 1024) throw_validation("generate: need at least 1024 symbols");
    if (static_cast<double>(oversampling) < 2.0 * (1.0 + rolloff))
        throw_validation("generate: oversampling below Nyquist margin 2*(1+rolloff)");
    if ((n_symbols * oversampling) % 2 != 0)
        throw_validation("generate: n_symbols * oversampling must be even");
    if (n_symbols < 2 * kFilterHalfSymbols + 1)
        throw_validation("generate: waveform shorter than the shaping filter");

    const std::size_t n = n_symbols * oversampling;

    // Filter taps laid out circularly: tap at offset m lands on index m mod n.
    cvec taps(n, cplx(0.0, 0.0));
    const auto half = static_cast<long>(kFilterHalfSymbols * oversampling);
    for (long m = -half; m <= half; ++m) {
        const double t = static_cast<double>(m) / static_cast<double>(oversampling);
        const std::size_t idx = static_cast<std::size_t>((m + static_cast<long>(n)) % static_cast<long>(n));
        taps[idx] = rrc_tap(t, rolloff);
    }
    fft_forward_inplace(taps);

    ComplexWaveform wfm;
    wfm.sample_rate = baud * static_cast<double>(oversampling);
    wfm.pol_x = shape_one_pol(derive_seed(seed, 'x'), n_symbols, oversampling, taps);
    if (dual_pol) wfm.pol_y = shape_one_pol(derive_seed(seed, 'y'), n_symbols, oversampling, taps);
    return wfm;
}

double peak_to_rms(const ComplexWaveform& wfm) {
    wfm.validate();
    double peak = 0.0;
    for (const auto& v : wfm.pol_x) peak = std::max(peak, std::abs(v));
    for (const auto& v : wfm.pol_y) peak = std::max(peak, std::abs(v));
    const double rms = std::sqrt(wfm.mean_power());
    if (rms == 0.0) throw_validation("peak_to_rms: all-zero waveform");
    return peak / rms;
}

}  // namespace notchlab
