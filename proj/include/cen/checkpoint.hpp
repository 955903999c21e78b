#pragma once

#include <string>

#include "cen/cen_model.hpp"

namespace cen {

// Versioned JSON checkpoint: architecture, regularization config, and the
// flat parameter vector. Doubles are written with round-trip precision.
inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const CenModel& model, const std::string& path);
CenModel load_checkpoint(const std::string& path);

}  // namespace cen
