#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "notchlab/errors.hpp"

namespace notchlab {

// Uniform frequency axis in ascending order. Bin k sits at f_start + k*f_step;
// bin k covers [f_start + (k-0.5)*f_step, f_start + (k+0.5)*f_step).
struct FrequencyGrid {
    double f_start = 0.0;  // Hz, center of bin 0
    double f_step = 0.0;   // Hz, > 0
    std::size_t n_bins = 0;

    double freq(std::size_t k) const { return f_start + static_cast<double>(k) * f_step; }
    double f_end() const { return freq(n_bins - 1); }
    double span() const { return static_cast<double>(n_bins) * f_step; }

    void validate() const {
        if (!(f_step > 0.0)) throw_validation("grid: f_step must be > 0");
        if (n_bins < 2) throw_validation("grid: need at least 2 bins");
    }

    bool operator==(const FrequencyGrid&) const = default;
};

// Symmetric grid carrying a length-n FFT of a waveform sampled at fs.
// Ascending index a and FFT index j are related by a = (j + n/2) mod n.
inline FrequencyGrid fft_grid(double sample_rate, std::size_t n) {
    if (n < 2 || n % 2 != 0) throw_validation("grid: spectral ops need an even waveform length, got " + std::to_string(n));
    FrequencyGrid g;
    g.f_step = sample_rate / static_cast<double>(n);
    g.f_start = -sample_rate / 2.0;
    g.n_bins = n;
    return g;
}

inline std::size_t fft_index(const FrequencyGrid& g, std::size_t ascending) {
    return (ascending + g.n_bins / 2) % g.n_bins;
}

// Closed frequency interval, used for bands of interest and filter regions.
struct Band {
    double lo_hz = 0.0;
    double hi_hz = 0.0;

    double width() const { return hi_hz - lo_hz; }
    double center() const { return 0.5 * (lo_hz + hi_hz); }
    bool contains(const Band& other) const { return lo_hz <= other.lo_hz && other.hi_hz <= hi_hz; }

    void validate() const {
        if (!(lo_hz < hi_hz)) throw_validation("band: lo must be < hi");
    }
};

// Half-open bin index range [lo, hi).
struct BinRange {
    std::size_t lo = 0;
    std::size_t hi = 0;

    std::size_t count() const { return hi - lo; }
    bool empty() const { return hi <= lo; }
    bool contains(std::size_t k) const { return lo <= k && k < hi; }
    bool overlaps(const BinRange& o) const { return lo < o.hi && o.lo < hi; }
};

// Snap a band onto grid bin boundaries. Boundary b lies at
// f_start + (b - 0.5)*f_step; each edge moves to its nearest boundary and the
// band becomes the bins strictly between the two snapped boundaries. An edge
// exactly midway between boundaries snaps upward.
inline BinRange snap_band(const FrequencyGrid& g, const Band& band) {
    band.validate();
    auto boundary = [&](double f) {
        double u = (f - g.f_start) / g.f_step + 0.5;
        double b = std::round(u);
        if (b < 0.0) b = 0.0;
        double n = static_cast<double>(g.n_bins);
        if (b > n) b = n;
        return static_cast<std::size_t>(b);
    };
    return BinRange{boundary(band.lo_hz), boundary(band.hi_hz)};
}

inline Band snapped_band_freqs(const FrequencyGrid& g, const BinRange& r) {
    return Band{g.f_start + (static_cast<double>(r.lo) - 0.5) * g.f_step,
                g.f_start + (static_cast<double>(r.hi) - 0.5) * g.f_step};
}

// Reflection about f = 0 on a symmetric FFT grid. Computed from the primary
// bin range, not by re-snapping mirrored frequencies, so primary and mirror
// stay consistent bin for bin even when an edge snapped on a tie.
inline BinRange mirror_range(const FrequencyGrid& g, const BinRange& r) {
    const std::size_t n = g.n_bins;
    if (r.empty()) return BinRange{0, 0};
    if (r.lo == 0 || r.hi > n - 1)
        throw_validation("band: cannot mirror a range touching the grid edge");
    return BinRange{n + 1 - r.hi, n + 1 - r.lo};
}

// Bins lying fully inside a band given in Hz. Unlike snap_band this never
// rounds outward, so a partially covered edge bin is excluded.
inline BinRange inward_bins(const FrequencyGrid& g, const Band& band) {
    const double ulo = (band.lo_hz - g.f_start) / g.f_step + 0.5;  // boundary coordinates
    const double uhi = (band.hi_hz - g.f_start) / g.f_step + 0.5;
    double lo = std::ceil(ulo - 1e-9), hi = std::floor(uhi + 1e-9);
    lo = std::max(lo, 0.0);
    hi = std::min(hi, static_cast<double>(g.n_bins));
    if (!(hi > lo)) return BinRange{0, 0};
    return BinRange{static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

// Bins whose centers keep at least margin_bins of distance to both band
// edges. Readouts of a spectrally empty band use margin 2: the estimator's
// window mainlobe spans two bins, so anything closer still reads the live
// spectrum outside the band. This realizes the one-bin edge guard on top of
// whatever fraction of a bin the edge itself occupies.
inline BinRange interior_bins(const FrequencyGrid& g, const Band& band, double margin_bins = 2.0) {
    const double ulo = (band.lo_hz - g.f_start) / g.f_step + 0.5;
    const double uhi = (band.hi_hz - g.f_start) / g.f_step + 0.5;
    double lo = std::ceil(ulo + margin_bins - 0.5 - 1e-9);
    double hi = std::floor(uhi - margin_bins - 0.5 + 1e-9) + 1.0;
    lo = std::max(lo, 0.0);
    hi = std::min(hi, static_cast<double>(g.n_bins));
    if (!(hi > lo)) return BinRange{0, 0};
    return BinRange{static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

}  // namespace notchlab
