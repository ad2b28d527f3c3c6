#pragma once

#include "soilsim/contrastive.hpp"

#include <string>

namespace soilsim {

/// Plain-text model checkpoint. Versioned sections hold every encoder
/// array (row-major, %.17g so doubles round-trip exactly), the
/// standardization stats, direction set, normalization spec, reference
/// labels, calibration and the training seed. Loading reproduces infer
/// outputs bit-identically.
void save_checkpoint(const ModelBundle& bundle, const std::string& path);
ModelBundle load_checkpoint(const std::string& path);

} // namespace soilsim
