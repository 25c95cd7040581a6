#pragma once

#include <string>

#include "flowcast/flow.hpp"

namespace flowcast {

// Middlebury .flo: the float 202021.25 ("PIEH"), int32 width, int32 height,
// then interleaved float32 (dx, dy) row-major. Round-trips are bit-exact.

FlowField read_flo(const std::string& path);
void write_flo(const std::string& path, const FlowField& flow);

} // namespace flowcast
