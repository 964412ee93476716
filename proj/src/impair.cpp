#include "notchlab/impair.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "notchlab/fft.hpp"

namespace notchlab {

namespace {

void check_points_sorted(const CrosstalkProfile::Points& p, const char* name) {
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i].first < 0.0)
            throw_validation(std::string("crosstalk: ") + name + " control points must sit at f >= 0");
        if (i > 0 && !(p[i].first > p[i - 1].first))
            throw_validation(std::string("crosstalk: ") + name + " control points must be strictly ascending");
    }
}

cplx interp_points(const CrosstalkProfile::Points& p, double f, cplx empty_value) {
    if (p.empty()) return empty_value;
    if (f <= p.front().first) return p.front().second;
    if (f >= p.back().first) return p.back().second;
    auto it = std::upper_bound(p.begin(), p.end(), f,
                               [](double v, const auto& pt) { return v < pt.first; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double t = (f - lo.first) / (hi.first - lo.first);
    return lo.second + t * (hi.second - lo.second);
}

}  // namespace

bool CrosstalkProfile::flat_unity(const Points& p) {
    for (const auto& [f, v] : p)
        if (v != cplx(1.0, 0.0)) return false;
    return true;
}

void CrosstalkProfile::validate() const {
    check_points_sorted(ii, "ii");
    check_points_sorted(qq, "qq");
    check_points_sorted(qi, "qi");
    check_points_sorted(iq, "iq");
}

std::vector<cplx> realize_crosstalk_term(const CrosstalkProfile::Points& points,
                                         const FrequencyGrid& grid, cplx empty_value) {
    const std::size_t n = grid.n_bins;
    std::vector<cplx> out(n);
    const std::size_t half = n / 2;  // ascending index of f = 0
    for (std::size_t a = half; a < n; ++a) out[a] = interp_points(points, grid.freq(a), empty_value);
    out[half] = cplx(out[half].real(), 0.0);  // DC must be real
    for (std::size_t a = 1; a < half; ++a) out[a] = std::conj(out[n - a]);
    // the unpaired band-edge bin has no mirror; keep it real
    out[0] = cplx(interp_points(points, -grid.f_start, empty_value).real(), 0.0);
    return out;
}

ComplexWaveform apply_iq_crosstalk(const ComplexWaveform& wfm, const CrosstalkProfile& profile) {
    wfm.validate();
    profile.validate();
    const FrequencyGrid grid = fft_grid(wfm.sample_rate, wfm.size());
    CrosstalkResponse resp;
    resp.grid = grid;
    resp.ii = realize_crosstalk_term(profile.ii, grid, cplx(1.0, 0.0));
    resp.qq = realize_crosstalk_term(profile.qq, grid, cplx(1.0, 0.0));
    resp.qi = realize_crosstalk_term(profile.qi, grid, cplx(0.0, 0.0));
    resp.iq = realize_crosstalk_term(profile.iq, grid, cplx(0.0, 0.0));
    return apply_iq_crosstalk(wfm, resp);
}

namespace {

void check_hermitian(const std::vector<cplx>& c, const FrequencyGrid& g, const char* name) {
    const std::size_t n = g.n_bins;
    if (c.size() != n) throw_validation(std::string("crosstalk: ") + name + " length does not match grid");
    const double tol = 1e-9;
    auto bad = [&](const cplx& a, const cplx& b) { return std::abs(a - b) > tol * (1.0 + std::abs(a)); };
    if (std::abs(c[0].imag()) > tol || std::abs(c[n / 2].imag()) > tol)
        throw_validation(std::string("crosstalk: ") + name + " must be real at 0 and at the band edge");
    for (std::size_t a = 1; a < n / 2; ++a)
        if (bad(c[a], std::conj(c[n - a])))
            throw_validation(std::string("crosstalk: ") + name +
                             " is not Hermitian, c(-f) must equal conj(c(f))");
}

std::vector<cplx> mixed_component(const cvec& fi, const cvec& fq, const std::vector<cplx>& ci,
                                  const std::vector<cplx>& cq, const FrequencyGrid& grid) {
    const std::size_t n = grid.n_bins;
    cvec mixed(n);
    for (std::size_t a = 0; a < n; ++a) {
        const std::size_t j = fft_index(grid, a);
        mixed[j] = ci[a] * fi[j] + cq[a] * fq[j];
    }
    fft_inverse_inplace(mixed);
    return mixed;
}

std::vector<cplx> crosstalk_one_pol(const std::vector<cplx>& x, const CrosstalkResponse& r) {
    const std::size_t n = x.size();
    cvec fi(n), fq(n);
    for (std::size_t i = 0; i < n; ++i) {
        fi[i] = cplx(x[i].real(), 0.0);
        fq[i] = cplx(x[i].imag(), 0.0);
    }
    fft_forward_inplace(fi);
    fft_forward_inplace(fq);
    const cvec ih = mixed_component(fi, fq, r.ii, r.qi, r.grid);
    const cvec qh = mixed_component(fi, fq, r.iq, r.qq, r.grid);
    std::vector<cplx> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = cplx(ih[i].real(), qh[i].real());
    return out;
}

}  // namespace

ComplexWaveform apply_iq_crosstalk(const ComplexWaveform& wfm, const CrosstalkResponse& response) {
    wfm.validate();
    if (response.grid.n_bins != wfm.size())
        throw_validation("crosstalk: response grid does not match waveform length");
    check_hermitian(response.ii, response.grid, "ii");
    check_hermitian(response.qq, response.grid, "qq");
    check_hermitian(response.qi, response.grid, "qi");
    check_hermitian(response.iq, response.grid, "iq");

    ComplexWaveform out;
    out.sample_rate = wfm.sample_rate;
    out.label = wfm.label;
    out.pol_x = crosstalk_one_pol(wfm.pol_x, response);
    if (wfm.dual_pol()) out.pol_y = crosstalk_one_pol(wfm.pol_y, response);
    return out;
}

namespace {

std::vector<cplx> skew_one_pol(const std::vector<cplx>& x, double tau_s, double fs) {
    const std::size_t n = x.size();
    cvec fq(n);
    for (std::size_t i = 0; i < n; ++i) fq[i] = cplx(x[i].imag(), 0.0);
    fft_forward_inplace(fq);
    const double step = fs / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double f = (j < n / 2) ? static_cast<double>(j) * step
                                     : (static_cast<double>(j) - static_cast<double>(n)) * step;
        const double phase = -2.0 * std::numbers::pi * f * tau_s;
        fq[j] *= cplx(std::cos(phase), std::sin(phase));
    }
    fft_inverse_inplace(fq);
    std::vector<cplx> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = cplx(x[i].real(), fq[i].real());
    return out;
}

}  // namespace

ComplexWaveform apply_skew(const ComplexWaveform& wfm, double tau_ps, double symbol_period_ps) {
    wfm.validate();
    if (!(symbol_period_ps > 0.0)) throw_validation("skew: symbol period must be > 0");
    if (!(std::abs(tau_ps) < 0.1 * symbol_period_ps))
        throw_validation("skew: |tau| must stay below 10% of the symbol period");
    if (wfm.size() % 2 != 0) throw_validation("skew: waveform length must be even");
    if (tau_ps == 0.0) return wfm;

    ComplexWaveform out;
    out.sample_rate = wfm.sample_rate;
    out.label = wfm.label;
    out.pol_x = skew_one_pol(wfm.pol_x, tau_ps * 1e-12, wfm.sample_rate);
    if (wfm.dual_pol()) out.pol_y = skew_one_pol(wfm.pol_y, tau_ps * 1e-12, wfm.sample_rate);
    return out;
}

ComplexWaveform quantize_dac(const ComplexWaveform& wfm, int bits) {
    wfm.validate();
    if (bits < 1 || bits > 24) throw_validation("dac: bits must be in [1, 24]");

    double fs_amp = 0.0;
    auto scan = [&](const std::vector<cplx>& v) {
        for (const auto& s : v)
            fs_amp = std::max({fs_amp, std::abs(s.real()), std::abs(s.imag())});
    };
    scan(wfm.pol_x);
    scan(wfm.pol_y);
    if (fs_amp == 0.0) return wfm;

    const double levels = std::pow(2.0, bits);
    const double delta = 2.0 * fs_amp / levels;
    const double top = fs_amp - delta / 2.0;
    auto q = [&](double v) {
        const double out = delta * (std::floor(v / delta) + 0.5);
        return std::clamp(out, -top, top);
    };

    ComplexWaveform out;
    out.sample_rate = wfm.sample_rate;
    out.label = wfm.label;
    auto quantize = [&](const std::vector<cplx>& v) {
        std::vector<cplx> r(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) r[i] = cplx(q(v[i].real()), q(v[i].imag()));
        return r;
    };
    out.pol_x = quantize(wfm.pol_x);
    if (wfm.dual_pol()) out.pol_y = quantize(wfm.pol_y);
    return out;
}

void NoiseShape::validate() const {
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].second < 0.0) throw_validation("noise shape: weights must be >= 0");
        if (i > 0 && !(points[i].first > points[i - 1].first))
            throw_validation("noise shape: control points must be strictly ascending");
    }
}

double NoiseShape::weight_at(double freq) const {
    if (points.empty()) return 1.0;
    if (freq <= points.front().first) return points.front().second;
    if (freq >= points.back().first) return points.back().second;
    auto it = std::upper_bound(points.begin(), points.end(), freq,
                               [](double v, const auto& pt) { return v < pt.first; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double t = (freq - lo.first) / (hi.first - lo.first);
    return lo.second + t * (hi.second - lo.second);
}

const char* to_string(InterfaceStage stage) {
    switch (stage) {
        case InterfaceStage::E2E: return "e2e";
        case InterfaceStage::Card2OSA: return "card2osa";
        case InterfaceStage::Card2Card: return "card2card";
    }
    return "?";
}

void ImpairmentConfig::validate() const {
    const bool has_floor = nfl_tx_db.has_value() || nfl_rx_db.has_value();
    if (has_floor) {
        if (!(ref_band.lo_hz < ref_band.hi_hz))
            throw_validation("impairments: noise floors need a valid ref_band for their level reference");
    }
    if (skew_ps.has_value() && !(symbol_period_ps > 0.0))
        throw_validation("impairments: skew needs symbol_period_ps for the delay guard");
    if (dac_bits.has_value() && (*dac_bits < 1 || *dac_bits > 24))
        throw_validation("impairments: dac_bits must be in [1, 24]");
    if (crosstalk.has_value()) crosstalk->validate();
    nfl_shape.validate();
}

}  // namespace notchlab
