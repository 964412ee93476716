#pragma once

#include <string>

#include "notchlab/capture.hpp"

namespace notchlab {

// Trace files are plain CSV with the header `freq_hz,psd_db`, PSD in dB
// relative to a reference density recorded in a sidecar file next to the
// CSV (same key-value format as scenarios). The sidecar carries everything
// stitching needs that the spectrum itself does not: notch geometry, the
// normalization factor, the measurement stage.

// Default sidecar path: the CSV path with ".meta" appended.
std::string sidecar_path(const std::string& csv_path);

// Write trace.spectrum as dB relative to ref_density_per_hz, plus the
// sidecar. Zero PSD bins become "-inf" and survive a round trip.
void export_trace(const MeasurementTrace& trace, double ref_density_per_hz,
                  const std::string& csv_path);

// Read a trace CSV and its sidecar back into a MeasurementTrace. The
// frequency column may be ascending or descending (descending input is
// reversed); the spectrum is resampled onto a uniform grid by linear
// interpolation of the linear power, with the step taken from the sidecar's
// resample_step_hz when present and the file's mean spacing otherwise.
// Imported traces carry no ground truth.
MeasurementTrace import_trace(const std::string& csv_path, const std::string& meta_path);

}  // namespace notchlab
