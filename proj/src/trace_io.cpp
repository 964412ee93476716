#include "notchlab/trace_io.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "notchlab/keyfile.hpp"
#include "notchlab/report.hpp"

namespace notchlab {

namespace {

InterfaceStage parse_stage(KeyFile& kf, const std::string& key, const std::string& raw) {
    if (raw == "e2e") return InterfaceStage::E2E;
    if (raw == "card2osa") return InterfaceStage::Card2OSA;
    if (raw == "card2card") return InterfaceStage::Card2Card;
    kf.fail(key, "expected e2e|card2osa|card2card, got '" + raw + "'");
}

NotchKind parse_kind(KeyFile& kf, const std::string& key, const std::string& raw) {
    if (raw == "single") return NotchKind::Single;
    if (raw == "dual") return NotchKind::Dual;
    kf.fail(key, "expected single|dual, got '" + raw + "'");
}

}  // namespace

std::string sidecar_path(const std::string& csv_path) { return csv_path + ".meta"; }

void export_trace(const MeasurementTrace& trace, double ref_density_per_hz,
                  const std::string& csv_path) {
    trace.spectrum.validate();
    if (!(ref_density_per_hz > 0.0))
        throw_validation("trace export: reference density must be > 0");

    std::ostringstream csv;
    csv << "freq_hz,psd_db\n";
    const auto& g = trace.spectrum.grid;
    for (std::size_t k = 0; k < g.n_bins; ++k) {
        const double db = 10.0 * std::log10(trace.spectrum.psd[k] / ref_density_per_hz);
        csv << Report::format_double(g.freq(k)) << "," << Report::format_double(db) << "\n";
    }
    atomic_write_file(csv_path, csv.str());

    std::ostringstream meta;
    meta << "ref_density_per_hz = " << Report::format_double(ref_density_per_hz) << "\n";
    meta << "resolution_bw_hz = " << Report::format_double(trace.spectrum.resolution_bw) << "\n";
    // written so re-import reproduces this exact grid
    meta << "resample_step_hz = " << Report::format_double(g.f_step) << "\n";
    meta << "stage = " << to_string(trace.stage) << "\n";
    meta << "normalized = " << (trace.normalized ? 1 : 0) << "\n";
    meta << "norm = " << Report::format_double(trace.norm) << "\n";
    meta << "notch.kind = " << (trace.notch.kind == NotchKind::Single ? "single" : "dual") << "\n";
    meta << "notch.center_hz = " << Report::format_double(trace.notch.center_hz) << "\n";
    meta << "notch.width_hz = " << Report::format_double(trace.notch.width_hz) << "\n";
    meta << "notch.gain_db = " << Report::format_double(trace.notch.gain_db) << "\n";
    meta << "boi.lo_hz = " << Report::format_double(trace.boi.lo_hz) << "\n";
    meta << "boi.hi_hz = " << Report::format_double(trace.boi.hi_hz) << "\n";
    meta << "primary.lo_hz = " << Report::format_double(trace.primary_band.lo_hz) << "\n";
    meta << "primary.hi_hz = " << Report::format_double(trace.primary_band.hi_hz) << "\n";
    if (!trace.notched_bands.empty()) {
        meta << "notched_bands = ";
        for (std::size_t i = 0; i < trace.notched_bands.size(); ++i) {
            if (i) meta << ",";
            meta << Report::format_double(trace.notched_bands[i].lo_hz) << ":"
                 << Report::format_double(trace.notched_bands[i].hi_hz);
        }
        meta << "\n";
    }
    atomic_write_file(sidecar_path(csv_path), meta.str());
}

MeasurementTrace import_trace(const std::string& csv_path, const std::string& meta_path) {
    const std::string text = read_text_file(csv_path);

    std::vector<double> freq, db;
    bool saw_header = false;
    int row = 0;
    std::size_t pos = 0;
    int line_no = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string line =
            (nl == std::string::npos) ? text.substr(pos) : text.substr(pos, nl - pos);
        pos = (nl == std::string::npos) ? text.size() + 1 : nl + 1;
        ++line_no;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty()) continue;

        if (!saw_header) {
            if (line != "freq_hz,psd_db")
                throw_parse(csv_path + ": first line must be the header 'freq_hz,psd_db'");
            saw_header = true;
            continue;
        }
        ++row;
        const auto parts = split_list(line, ',');
        if (parts.size() != 2)
            throw_parse(csv_path + ": row " + std::to_string(row) + " (line " +
                        std::to_string(line_no) + "): expected 2 comma-separated values");
        const auto f = parse_double(parts[0]);
        const auto v = parse_double(parts[1]);
        if (!f || !v)
            throw_parse(csv_path + ": row " + std::to_string(row) + " (line " +
                        std::to_string(line_no) + "): malformed number");
        freq.push_back(*f);
        db.push_back(*v);
    }
    if (!saw_header) throw_parse(csv_path + ": empty file, header 'freq_hz,psd_db' missing");
    if (freq.size() < 2) throw_parse(csv_path + ": need at least 2 data rows");

    // either strictly ascending throughout or strictly descending throughout
    const bool descending = freq[1] < freq[0];
    for (std::size_t i = 1; i < freq.size(); ++i) {
        const bool ok = descending ? freq[i] < freq[i - 1] : freq[i] > freq[i - 1];
        if (!ok)
            throw_parse(csv_path + ": non-monotone frequency column at row " +
                        std::to_string(i + 1));
    }
    if (descending) {
        std::reverse(freq.begin(), freq.end());
        std::reverse(db.begin(), db.end());
    }

    KeyFile meta = KeyFile::parse(read_text_file(meta_path), meta_path);
    MeasurementTrace trace;
    const double ref = meta.take_double("ref_density_per_hz").value_or(1.0);
    if (!(ref > 0.0)) meta.fail("ref_density_per_hz", "must be > 0");
    double step = meta.take_double("resample_step_hz").value_or(0.0);
    const auto rbw = meta.take_double("resolution_bw_hz");
    if (auto v = meta.take("stage")) trace.stage = parse_stage(meta, "stage", *v);
    if (auto v = meta.take_uint("normalized")) trace.normalized = (*v != 0);
    if (auto v = meta.take_double("norm")) trace.norm = *v;
    if (auto v = meta.take("notch.kind")) trace.notch.kind = parse_kind(meta, "notch.kind", *v);
    if (auto v = meta.take_double("notch.center_hz")) trace.notch.center_hz = *v;
    if (auto v = meta.take_double("notch.width_hz")) trace.notch.width_hz = *v;
    if (auto v = meta.take_double("notch.gain_db")) trace.notch.gain_db = *v;
    if (auto v = meta.take_double("boi.lo_hz")) trace.boi.lo_hz = *v;
    if (auto v = meta.take_double("boi.hi_hz")) trace.boi.hi_hz = *v;
    if (auto v = meta.take_double("primary.lo_hz")) trace.primary_band.lo_hz = *v;
    if (auto v = meta.take_double("primary.hi_hz")) trace.primary_band.hi_hz = *v;
    if (auto v = meta.take("notched_bands")) {
        for (const auto& piece : split_list(*v, ',')) {
            const auto parts = split_list(piece, ':');
            std::optional<double> lo, hi;
            if (parts.size() == 2) {
                lo = parse_double(parts[0]);
                hi = parse_double(parts[1]);
            }
            if (!lo || !hi)
                meta.fail("notched_bands", "expected 'lo:hi' entries, got '" + piece + "'");
            trace.notched_bands.push_back(Band{*lo, *hi});
        }
    } else if (trace.primary_band.hi_hz > trace.primary_band.lo_hz) {
        trace.notched_bands.push_back(trace.primary_band);
    }
    meta.reject_leftovers();

    if (step == 0.0) step = (freq.back() - freq.front()) / static_cast<double>(freq.size() - 1);
    if (!(step > 0.0)) meta.fail("resample_step_hz", "must be > 0");
    const std::size_t n_out =
        static_cast<std::size_t>(std::floor((freq.back() - freq.front()) / step + 1e-9)) + 1;
    if (n_out < 2)
        throw_validation(csv_path + ": resample step " + Report::format_double(step) +
                         " Hz exceeds the trace span");

    // linear power for the interpolation; dB of a zero bin is -inf and maps
    // back to exactly 0
    std::vector<double> lin(freq.size());
    for (std::size_t i = 0; i < lin.size(); ++i) lin[i] = ref * std::pow(10.0, db[i] / 10.0);

    trace.spectrum.grid = FrequencyGrid{freq.front(), step, n_out};
    trace.spectrum.psd.resize(n_out);
    for (std::size_t k = 0; k < n_out; ++k) {
        const double f = trace.spectrum.grid.freq(k);
        auto it = std::upper_bound(freq.begin(), freq.end(), f);
        if (it == freq.begin()) {
            trace.spectrum.psd[k] = lin.front();
            continue;
        }
        if (it == freq.end()) {
            trace.spectrum.psd[k] = lin.back();
            continue;
        }
        const std::size_t j = static_cast<std::size_t>(it - freq.begin()) - 1;
        const double t = (f - freq[j]) / (freq[j + 1] - freq[j]);
        trace.spectrum.psd[k] = lin[j] + t * (lin[j + 1] - lin[j]);
    }
    trace.spectrum.resolution_bw = rbw.value_or(step);
    trace.spectrum.validate();
    trace.truth.reset();
    return trace;
}

}  // namespace notchlab
