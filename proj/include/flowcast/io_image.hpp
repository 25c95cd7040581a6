#pragma once

#include <string>

#include "flowcast/image.hpp"

namespace flowcast {

// Frames are stored as 8-bit PNG (gray or RGB) or binary PPM/PGM with linear
// scaling between [0,1] and [0,255]. Masks are 0/255 grayscale PNGs.

Frame read_frame(const std::string& path);  // dispatches on extension
void write_frame(const std::string& path, const Frame& frame);

Frame read_png(const std::string& path);
void write_png(const std::string& path, const Frame& frame);

Frame read_pnm(const std::string& path);    // P5 / P6, maxval 255
void write_pnm(const std::string& path, const Frame& frame);

Mask read_mask_png(const std::string& path);
void write_mask_png(const std::string& path, const Mask& mask);

} // namespace flowcast
