#include "notchlab/psd.hpp"

#include <cmath>
#include <numbers>

#include "notchlab/fft.hpp"

namespace notchlab {

std::size_t psd_segment_length(double sample_rate, double resolution_bw) {
    if (!(resolution_bw > 0.0)) throw_validation("psd: resolution_bw must be > 0");
    const double needed = sample_rate / resolution_bw;
    std::size_t len = 1;
    while (static_cast<double>(len) < needed) len *= 2;
    return len;
}

PowerSpectrum estimate_psd(const ComplexWaveform& wfm, double resolution_bw, Pol pol) {
    wfm.validate();
    if (pol == Pol::Y && !wfm.dual_pol()) throw_validation("psd: waveform has no Y polarization");
    const std::vector<cplx>& x = (pol == Pol::Y) ? wfm.pol_y : wfm.pol_x;
    const double fs = wfm.sample_rate;
    const std::size_t n = x.size();

    const std::size_t len = psd_segment_length(fs, resolution_bw);
    if (len < 64)
        throw_validation("psd: resolution_bw " + std::to_string(resolution_bw) +
                         " Hz is too coarse, segment would be under 64 samples");
    if (len > n)
        throw_validation("psd: resolution_bw " + std::to_string(resolution_bw) +
                         " Hz needs a segment longer than the waveform");

    // periodic Hann
    std::vector<double> w(len);
    double wpow = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
        w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(len)));
        wpow += w[i] * w[i];
    }

    const std::size_t hop = len / 2;
    const std::size_t n_segments = (n - len) / hop + 1;

    std::vector<double> acc(len, 0.0);
    cvec seg(len);
    for (std::size_t s = 0; s < n_segments; ++s) {
        const std::size_t off = s * hop;
        for (std::size_t i = 0; i < len; ++i) seg[i] = x[off + i] * w[i];
        fft_forward_inplace(seg);
        for (std::size_t j = 0; j < len; ++j) acc[j] += std::norm(seg[j]);
    }

    PowerSpectrum out;
    out.grid = fft_grid(fs, len);
    out.resolution_bw = resolution_bw;
    out.psd.resize(len);
    const double scale = 1.0 / (static_cast<double>(n_segments) * wpow * fs);
    for (std::size_t a = 0; a < len; ++a) out.psd[a] = acc[fft_index(out.grid, a)] * scale;
    return out;
}

PowerSpectrum fold_one_sided(const PowerSpectrum& two_sided) {
    two_sided.validate();
    const std::size_t L = two_sided.grid.n_bins;
    const std::size_t half = L / 2;  // ascending index of f = 0
    if (L % 2 != 0 || std::abs(two_sided.grid.freq(half)) > 1e-6 * two_sided.grid.f_step)
        throw_validation("fold: spectrum grid is not symmetric about 0");

    PowerSpectrum out;
    out.grid.f_start = 0.0;
    out.grid.f_step = two_sided.grid.f_step;
    out.grid.n_bins = half;
    out.resolution_bw = two_sided.resolution_bw;
    out.psd.resize(half);
    out.psd[0] = two_sided.psd[half];
    for (std::size_t m = 1; m < half; ++m)
        out.psd[m] = two_sided.psd[half + m] + two_sided.psd[half - m];
    return out;
}

}  // namespace notchlab
