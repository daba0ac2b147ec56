#pragma once

#include <filesystem>
#include <string>

#include "limbgo/limb_model.hpp"

namespace limbgo {

/// JSON document with explicit units (mm, rad); round-trips losslessly.
std::string model_to_json(const KinematicModel& model);
/// Throws ParseError.
KinematicModel model_from_json(const std::string& text, const std::string& source = "<model>");

void save_model(const std::filesystem::path& path, const KinematicModel& model);
KinematicModel load_model(const std::filesystem::path& path);

/// Structural equality, bit-exact on every number.
bool same_model(const KinematicModel& a, const KinematicModel& b);

}  // namespace limbgo
