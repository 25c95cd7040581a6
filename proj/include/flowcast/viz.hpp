#pragma once

#include "flowcast/flow.hpp"
#include "flowcast/image.hpp"

namespace flowcast::viz {

/// Color-wheel flow rendering: hue encodes the vector angle, saturation the
/// magnitude normalized by the field maximum (zero flow is white), value 1.
Frame flow_to_color(const FlowField& flow);

} // namespace flowcast::viz
