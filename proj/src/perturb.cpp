#include "notchlab/perturb.hpp"

#include <cmath>

#include "notchlab/fft.hpp"

namespace notchlab {

namespace {

double amp_gain_of(const NotchSpec& spec) {
    if (std::isinf(spec.gain_db) && spec.gain_db < 0.0) return 0.0;
    return std::pow(10.0, spec.gain_db / 20.0);
}

// Power-weighted sums over the band of interest on the ascending grid:
// total |X|^2 and the part removed by the filter.
struct BoiPower {
    double total = 0.0;
    double removed = 0.0;
};

BoiPower boi_power(const cvec& spectrum_fft, const PerturbationFilter& filter, const BinRange& boi) {
    BoiPower p;
    for (std::size_t a = boi.lo; a < boi.hi; ++a)
        p.total += std::norm(spectrum_fft[fft_index(filter.grid, a)]);
    for (const auto& r : filter.regions) {
        const std::size_t lo = std::max(r.bins.lo, boi.lo);
        const std::size_t hi = std::min(r.bins.hi, boi.hi);
        const double g2 = r.amp_gain * r.amp_gain;
        for (std::size_t a = lo; a < hi; ++a)
            p.removed += (1.0 - g2) * std::norm(spectrum_fft[fft_index(filter.grid, a)]);
    }
    return p;
}

BinRange snap_boi(const FrequencyGrid& grid, const Band& boi) {
    boi.validate();
    BinRange r = snap_band(grid, boi);
    if (r.empty()) throw_validation("boi: band of interest snaps to no grid bins");
    return r;
}

}  // namespace

PerturbationFilter build_filter(const NotchSpec& spec, const FrequencyGrid& grid) {
    spec.validate();
    grid.validate();

    PerturbationFilter f;
    f.grid = grid;
    f.spec = spec;

    const Band band = spec.band();
    if (band.lo_hz < grid.f_start || band.hi_hz > grid.f_end())
        throw_validation("notch: band extends outside the grid span");
    if (spec.width_hz < grid.f_step)
        throw_validation("notch: width below one grid bin of " + std::to_string(grid.f_step) + " Hz");

    f.primary = snap_band(grid, band);
    if (f.primary.empty())
        throw_validation("notch: band snaps to no grid bins");
    if (f.primary.lo == 0 || f.primary.hi > grid.n_bins - 1)
        throw_validation("notch: band touches the grid edge");
    f.mirror = mirror_range(grid, f.primary);

    const double g = amp_gain_of(spec);
    f.regions.push_back(FilterRegion{f.primary, g});
    if (spec.kind == NotchKind::Dual) {
        if (f.mirror.overlaps(f.primary))
            throw_validation("notch: dual bands overlap after snapping");
        f.regions.push_back(FilterRegion{f.mirror, g});
    }

    std::size_t attenuated = 0;
    for (const auto& r : f.regions) attenuated += r.bins.count();
    if (g == 0.0 && attenuated >= grid.n_bins)
        throw_validation("notch: filter would zero the whole grid");
    return f;
}

double normalization_factor(const ComplexWaveform& wfm, const PerturbationFilter& filter,
                            const Band& boi) {
    wfm.validate();
    if (filter.grid.n_bins != wfm.size())
        throw_validation("perturb: filter grid does not match waveform length");
    const BinRange boi_bins = snap_boi(filter.grid, boi);

    BoiPower p;
    cvec spec = fft_forward(wfm.pol_x);
    p = boi_power(spec, filter, boi_bins);
    if (wfm.dual_pol()) {
        spec = fft_forward(wfm.pol_y);
        const BoiPower py = boi_power(spec, filter, boi_bins);
        p.total += py.total;
        p.removed += py.removed;
    }
    if (p.total <= 0.0)
        throw_numeric("perturb: original waveform carries no power in the band of interest");
    return (p.total - p.removed) / p.total;
}

PerturbResult apply_perturbation(const ComplexWaveform& wfm, const PerturbationFilter& filter,
                                 bool normalize, const Band& boi) {
    wfm.validate();
    if (filter.grid.n_bins != wfm.size())
        throw_validation("perturb: filter grid does not match waveform length");
    const BinRange boi_bins = snap_boi(filter.grid, boi);

    PerturbResult out;
    out.wfm.sample_rate = wfm.sample_rate;
    out.wfm.label = wfm.label;

    double total = 0.0, removed = 0.0;
    auto filter_pol = [&](const std::vector<cplx>& in) {
        cvec spec = fft_forward(in);
        const BoiPower p = boi_power(spec, filter, boi_bins);
        total += p.total;
        removed += p.removed;
        for (const auto& r : filter.regions)
            for (std::size_t a = r.bins.lo; a < r.bins.hi; ++a)
                spec[fft_index(filter.grid, a)] *= r.amp_gain;
        fft_inverse_inplace(spec);
        return spec;
    };

    out.wfm.pol_x = filter_pol(wfm.pol_x);
    if (wfm.dual_pol()) out.wfm.pol_y = filter_pol(wfm.pol_y);

    if (total <= 0.0)
        throw_numeric("perturb: original waveform carries no power in the band of interest");
    out.norm = (total - removed) / total;

    if (normalize) {
        if (out.norm <= 0.0)
            throw_numeric("perturb: perturbed waveform carries no power in the band of interest");
        const double scale = 1.0 / std::sqrt(out.norm);
        for (auto& v : out.wfm.pol_x) v *= scale;
        for (auto& v : out.wfm.pol_y) v *= scale;
    }
    return out;
}

}  // namespace notchlab
