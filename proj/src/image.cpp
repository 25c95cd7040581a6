#include "flowcast/image.hpp"

#include <cmath>

#include "flowcast/flow.hpp"

namespace flowcast {

void Frame::validate() const {
    require(width > 0 && height > 0 && (channels == 1 || channels == 3),
            "Frame::validate: bad dimensions");
    require(data.size() == static_cast<size_t>(width) * height * channels,
            "Frame::validate: data size mismatch");
    for (float v : data)
        require(std::isfinite(v) && v >= 0.0f && v <= 1.0f,
                "Frame::validate: value outside [0, 1]");
}

size_t Mask::count() const {
    size_t n = 0;
    for (uint8_t b : bits) n += b;
    return n;
}

Mask mask_and(const Mask& a, const Mask& b) {
    require(a.same_shape(b), "mask_and: shape mismatch");
    Mask out(a.width, a.height);
    for (size_t i = 0; i < a.bits.size(); ++i) out.bits[i] = a.bits[i] & b.bits[i];
    return out;
}

Mask mask_or(const Mask& a, const Mask& b) {
    require(a.same_shape(b), "mask_or: shape mismatch");
    Mask out(a.width, a.height);
    for (size_t i = 0; i < a.bits.size(); ++i) out.bits[i] = a.bits[i] | b.bits[i];
    return out;
}

Mask mask_not(const Mask& a) {
    Mask out(a.width, a.height);
    for (size_t i = 0; i < a.bits.size(); ++i) out.bits[i] = a.bits[i] ? 0 : 1;
    return out;
}

void FlowField::validate() const {
    require(width > 0 && height > 0, "FlowField::validate: bad dimensions");
    require(v.size() == static_cast<size_t>(width) * height * 2,
            "FlowField::validate: data size mismatch");
    for (float c : v) require(std::isfinite(c), "FlowField::validate: non-finite component");
}

} // namespace flowcast
