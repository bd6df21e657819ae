#pragma once

#include "beamsel/network.hpp"

namespace beamsel::testing {

/// Stage-1 detector trained once per test process on a reduced desk-scale
/// dataset (one image per case, two epochs).
const nn::Network& trained_detector();

}  // namespace beamsel::testing
