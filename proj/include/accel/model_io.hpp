#pragma once

#include <filesystem>

#include "accel/kriging.hpp"

namespace accel::io {

// Fitted-model persistence as JSON: kernel parameters, normalization, and the
// design set. Loading rebuilds the factorization deterministically.
void save_model(const std::filesystem::path& path, const kriging::KrigingModel& model);
kriging::KrigingModel load_model(const std::filesystem::path& path);

}  // namespace accel::io
