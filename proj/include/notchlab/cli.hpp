#pragma once

#include <string>

#include "notchlab/report.hpp"
#include "notchlab/scenario.hpp"

namespace notchlab {

// One report builder per subcommand. Each rejects a scenario of the wrong
// kind, runs the experiment, and returns the full report; writing files is
// the caller's business (run_command does it).
Report cmd_stitch(const Scenario& sc);
Report cmd_skew(const Scenario& sc);
Report cmd_xtalk(const Scenario& sc);
Report cmd_psd(const Scenario& sc);

// Import a trace CSV + sidecar and summarize it as a report.
Report cmd_import(const std::string& csv_path, const std::string& meta_path);

// Full command-line front end: parses argv, dispatches, writes the report
// directory, prints its location, and maps every failure onto the stable
// exit codes (1 usage, 2 parse, 3 validation, 4 numeric, 5 I/O). The output
// directory is --out, else $NOTCHLAB_OUT, else ./out.
int run_command(int argc, const char* const* argv);

}  // namespace notchlab
