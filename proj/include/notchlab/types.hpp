#pragma once

#include <complex>
#include <string>
#include <vector>

#include "notchlab/grid.hpp"

namespace notchlab {

using cplx = std::complex<double>;

// Complex baseband waveform, one or two polarizations at a common rate.
struct ComplexWaveform {
    double sample_rate = 0.0;  // Hz
    std::vector<cplx> pol_x;
    std::vector<cplx> pol_y;  // empty when single polarization
    std::string label;

    bool dual_pol() const { return !pol_y.empty(); }
    std::size_t size() const { return pol_x.size(); }

    void validate() const {
        if (!(sample_rate > 0.0)) throw_validation("waveform: sample_rate must be > 0");
        if (pol_x.empty()) throw_validation("waveform: pol_x is empty");
        if (!pol_y.empty() && pol_y.size() != pol_x.size())
            throw_validation("waveform: polarizations must have equal length");
    }

    // Mean |sample|^2 across all populated polarizations.
    double mean_power() const {
        double acc = 0.0;
        for (const auto& v : pol_x) acc += std::norm(v);
        for (const auto& v : pol_y) acc += std::norm(v);
        const std::size_t n = pol_x.size() + pol_y.size();
        return n ? acc / static_cast<double>(n) : 0.0;
    }
};

enum class Pol { X, Y };

// Power spectral density on a uniform grid, linear units (power per Hz).
struct PowerSpectrum {
    FrequencyGrid grid;
    std::vector<double> psd;
    double resolution_bw = 0.0;  // Hz, requested resolution; grid.f_step <= this

    void validate() const {
        grid.validate();
        if (psd.size() != grid.n_bins) throw_validation("spectrum: psd length does not match grid");
        if (!(resolution_bw > 0.0)) throw_validation("spectrum: resolution_bw must be > 0");
    }

    // Riemann integral of the PSD over a bin range.
    double band_power(const BinRange& r) const {
        double acc = 0.0;
        for (std::size_t k = r.lo; k < r.hi; ++k) acc += psd[k];
        return acc * grid.f_step;
    }

    double total_power() const { return band_power(BinRange{0, grid.n_bins}); }
};

}  // namespace notchlab
