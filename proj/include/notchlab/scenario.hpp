#pragma once

#include <cstdint>
#include <string>

#include "notchlab/capture.hpp"
#include "notchlab/stitch.hpp"

namespace notchlab {

// Which experiment a scenario file describes; each CLI subcommand accepts
// exactly one kind.
enum class ScenarioKind { Stitch, Skew, Xtalk, Psd };

const char* to_string(ScenarioKind kind);

// Sweep parameters for the skew estimator, all under the "skew." key prefix.
struct SkewSweep {
    double sweep_lo_ps = -1.4;
    double sweep_hi_ps = 1.4;
    double step_ps = 0.25;
    int repeats = 8;
    double notch_center_hz = 20e9;
    double notch_width_hz = 2e9;
};

// One fully resolved experiment description. Loaded from a flat key-value
// file (dotted keys, '#' comments); every field has a documented default, so
// a minimal file needs only the keys that differ. The loader fills the
// derived impairment anchors (ref_band, symbol_period_ps, seed) and rejects
// unknown keys, so a typo cannot silently fall back to a default.
struct Scenario {
    std::string name;  // file stem; names the report directory
    ScenarioKind kind = ScenarioKind::Stitch;

    double baud_hz = 95e9;
    double rolloff = 0.05;
    std::size_t n_symbols = 32768;
    std::size_t oversampling = 4;
    std::uint64_t seed = 1;
    InterfaceStage stage = InterfaceStage::Card2OSA;
    double rbw_hz = 150e6;
    int captures = 1;  // capture averaging per notch / per sweep point

    Band boi{0.0, 0.0};  // zero-width = use the occupied band
    NotchKind plan_kind = NotchKind::Dual;
    double notch_width_hz = 2e9;

    SkewSweep skew;
    ImpairmentConfig impair;

    // Full span the pulse shaping occupies: +/- (1 + rolloff) * baud / 2.
    Band occupied_band() const;
    // boi if set, occupied band otherwise.
    Band effective_boi() const;
    ComplexWaveform make_waveform() const;
    StitchPlan make_plan(NotchKind kind) const;
};

// Parse scenario text; origin names the source in error messages. Unknown or
// malformed keys raise parse errors with line numbers; out-of-range values
// raise one validation error listing every violation.
Scenario parse_scenario(const std::string& text, const std::string& origin);

// Read and parse a scenario file; the scenario name is the file stem.
Scenario load_scenario(const std::string& path);

}  // namespace notchlab
