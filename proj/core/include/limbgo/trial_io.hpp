#pragma once

#include <filesystem>
#include <istream>
#include <string>

#include "limbgo/limb_model.hpp"

namespace limbgo {

/// Wide trial CSV: optional `# sample_rate_hz=<v>` line, then a header
/// `time,<marker>_x,<marker>_y,<marker>_z,...` and one row per frame (s, mm).
/// Empty or `nan` cells mark an absent marker. Without the rate line the
/// rate is inferred from the first two times. Throws ParseError.
TrialRecording parse_trial_csv(std::istream& in, const std::string& source = "<stream>");
TrialRecording read_trial_csv(const std::filesystem::path& path);

/// Full-precision writer; parse_trial_csv(trial_csv(r)) reproduces r exactly.
std::string trial_csv(const TrialRecording& recording);
void write_trial_csv(const std::filesystem::path& path, const TrialRecording& recording);

/// A single-frame file (static trial) as a MarkerFrame.
MarkerFrame read_static_csv(const std::filesystem::path& path);

}  // namespace limbgo
