#pragma once

#include <vector>

#include "flowcast/flow.hpp"
#include "flowcast/image.hpp"

namespace flowcast {

// 3x3 (8-neighborhood) structuring element throughout. Pixels outside the
// frame count as unset for dilation and as set for erosion, which keeps
// opening anti-extensive and closing extensive up to the borders.
Mask erode3(const Mask& m);
Mask dilate3(const Mask& m);
Mask morph_open(const Mask& m);  // erode then dilate
Mask morph_close(const Mask& m); // dilate then erode

struct Component {
    int label = 0;
    size_t area = 0;
    int min_x = 0, min_y = 0, max_x = 0, max_y = 0;
    double centroid_x = 0.0, centroid_y = 0.0;
};

struct ComponentMap {
    int width = 0;
    int height = 0;
    std::vector<int> labels;                  // -1 = background
    std::vector<Component> components;        // label i at index i
    Mask component_mask(int label) const;
};

/// 8-connected components in raster-scan order; components smaller than
/// min_area are dropped (their pixels get label -1).
ComponentMap connected_components(const Mask& m, size_t min_area);

/// out(p) = m(p + flow(p)) sampled bilinearly and binarized at 0.5.
/// Out-of-bounds samples are treated as unset.
Mask warp_mask_backward(const Mask& m, const FlowField& flow);

/// Pushes every set pixel along the flow and marks the 4 integer neighbors
/// of its landing point.
Mask splat_mask_forward(const Mask& m, const FlowField& flow);

} // namespace flowcast
