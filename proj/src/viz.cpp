#include "flowcast/viz.hpp"

#include <algorithm>
#include <cmath>

#include "flowcast/common.hpp"
#include "flowcast/parallel.hpp"

namespace flowcast::viz {

Frame flow_to_color(const FlowField& flow) {
    require(flow.width > 0 && flow.height > 0, "flow_to_color: empty flow");
    flow.validate();

    double max_mag = 0.0;
    for (size_t i = 0; i < flow.v.size(); i += 2) {
        const double m = std::sqrt(static_cast<double>(flow.v[i]) * flow.v[i] +
                                   static_cast<double>(flow.v[i + 1]) * flow.v[i + 1]);
        max_mag = std::max(max_mag, m);
    }
    const double scale = max_mag > 0.0 ? 1.0 / max_mag : 0.0;

    Frame out(flow.width, flow.height, 3);
    parallel_rows(flow.height, [&](int y) {
        for (int x = 0; x < flow.width; ++x) {
            const double dx = flow.dx(x, y), dy = flow.dy(x, y);
            const double sat = std::sqrt(dx * dx + dy * dy) * scale;
            const double hue = (std::atan2(dy, dx) / (2.0 * 3.14159265358979323846) + 1.0);
            const double h6 = (hue - std::floor(hue)) * 6.0;
            const int k = static_cast<int>(h6);
            const double f = h6 - k;
            const double p = 1.0 - sat;
            const double q = 1.0 - sat * f;
            const double t = 1.0 - sat * (1.0 - f);
            double r = 1, g = 1, b = 1;
            switch (k % 6) {
                case 0: g = t, b = p; break;
                case 1: r = q, b = p; break;
                case 2: r = p, b = t; break;
                case 3: r = p, g = q; break;
                case 4: r = t, g = p; break;
                default: g = p, b = q; break;
            }
            out.at(x, y, 0) = static_cast<float>(std::clamp(r, 0.0, 1.0));
            out.at(x, y, 1) = static_cast<float>(std::clamp(g, 0.0, 1.0));
            out.at(x, y, 2) = static_cast<float>(std::clamp(b, 0.0, 1.0));
        }
    });
    return out;
}

} // namespace flowcast::viz
