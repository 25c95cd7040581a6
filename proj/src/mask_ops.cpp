#include "flowcast/mask_ops.hpp"

#include <algorithm>
#include <cmath>

#include "flowcast/image_ops.hpp"
#include "flowcast/parallel.hpp"

namespace flowcast {

namespace {

template <bool Erode>
Mask morph3(const Mask& m) {
    Mask out(m.width, m.height);
    parallel_rows(m.height, [&](int y) {
        for (int x = 0; x < m.width; ++x) {
            bool acc = Erode;
            for (int dy = -1; dy <= 1 && acc == Erode; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = x + dx, ny = y + dy;
                    const bool inside = nx >= 0 && ny >= 0 && nx < m.width && ny < m.height;
                    // Outside the frame counts as unset for dilation but as
                    // set for erosion, so open/close keep their usual
                    // shrink/grow guarantees at the borders.
                    const bool v = inside ? m.at(nx, ny) : Erode;
                    if (Erode ? !v : v) {
                        acc = !Erode;
                        break;
                    }
                }
            }
            out.set(x, y, acc);
        }
    });
    return out;
}

} // namespace

Mask erode3(const Mask& m) { return morph3<true>(m); }
Mask dilate3(const Mask& m) { return morph3<false>(m); }
Mask morph_open(const Mask& m) { return dilate3(erode3(m)); }
Mask morph_close(const Mask& m) { return erode3(dilate3(m)); }

Mask ComponentMap::component_mask(int label) const {
    require(label >= 0 && label < static_cast<int>(components.size()),
            "component_mask: no such label");
    Mask out(width, height);
    for (size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == label) out.bits[i] = 1;
    return out;
}

ComponentMap connected_components(const Mask& m, size_t min_area) {
    ComponentMap cm;
    cm.width = m.width;
    cm.height = m.height;
    cm.labels.assign(m.bits.size(), -1);

    // Raster scan with an explicit stack; labels are assigned in the order
    // components are first met, which is deterministic.
    std::vector<size_t> stack;
    std::vector<int> raw(m.bits.size(), -1);
    struct Acc {
        size_t area = 0;
        int min_x, min_y, max_x, max_y;
        double sum_x = 0.0, sum_y = 0.0;
    };
    std::vector<Acc> accs;
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            const size_t i = m.index(x, y);
            if (!m.bits[i] || raw[i] >= 0) continue;
            const int label = static_cast<int>(accs.size());
            accs.push_back(Acc{0, x, y, x, y, 0.0, 0.0});
            raw[i] = label;
            stack.assign(1, i);
            while (!stack.empty()) {
                const size_t j = stack.back();
                stack.pop_back();
                const int jx = static_cast<int>(j % m.width);
                const int jy = static_cast<int>(j / m.width);
                Acc& a = accs[static_cast<size_t>(label)];
                ++a.area;
                a.min_x = std::min(a.min_x, jx);
                a.min_y = std::min(a.min_y, jy);
                a.max_x = std::max(a.max_x, jx);
                a.max_y = std::max(a.max_y, jy);
                a.sum_x += jx;
                a.sum_y += jy;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = jx + dx, ny = jy + dy;
                        if (nx < 0 || ny < 0 || nx >= m.width || ny >= m.height) continue;
                        const size_t n = m.index(nx, ny);
                        if (m.bits[n] && raw[n] < 0) {
                            raw[n] = label;
                            stack.push_back(n);
                        }
                    }
                }
            }
        }
    }

    // Keep large components and compact the labels.
    std::vector<int> remap(accs.size(), -1);
    for (size_t l = 0; l < accs.size(); ++l) {
        if (accs[l].area < min_area) continue;
        Component c;
        c.label = static_cast<int>(cm.components.size());
        c.area = accs[l].area;
        c.min_x = accs[l].min_x;
        c.min_y = accs[l].min_y;
        c.max_x = accs[l].max_x;
        c.max_y = accs[l].max_y;
        c.centroid_x = accs[l].sum_x / static_cast<double>(accs[l].area);
        c.centroid_y = accs[l].sum_y / static_cast<double>(accs[l].area);
        remap[l] = c.label;
        cm.components.push_back(c);
    }
    for (size_t i = 0; i < raw.size(); ++i)
        if (raw[i] >= 0) cm.labels[i] = remap[static_cast<size_t>(raw[i])];
    return cm;
}

Mask warp_mask_backward(const Mask& m, const FlowField& flow) {
    require(m.width == flow.width && m.height == flow.height,
            "warp_mask_backward: shape mismatch");
    Frame f(m.width, m.height, 1);
    for (size_t i = 0; i < m.bits.size(); ++i) f.data[i] = m.bits[i] ? 1.0f : 0.0f;
    Mask out(m.width, m.height);
    parallel_rows(m.height, [&](int y) {
        for (int x = 0; x < m.width; ++x) {
            const double sx = x + flow.dx(x, y);
            const double sy = y + flow.dy(x, y);
            float v = 0.0f;
            const bool ok = bilinear_sample(f, sx, sy, &v);
            out.set(x, y, ok && v >= 0.5f);
        }
    });
    return out;
}

Mask splat_mask_forward(const Mask& m, const FlowField& flow) {
    require(m.width == flow.width && m.height == flow.height,
            "splat_mask_forward: shape mismatch");
    Mask out(m.width, m.height);
    // Serial: splats from different rows may collide on a target pixel.
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            if (!m.at(x, y)) continue;
            const double tx = x + flow.dx(x, y);
            const double ty = y + flow.dy(x, y);
            const int x0 = static_cast<int>(std::floor(tx));
            const int y0 = static_cast<int>(std::floor(ty));
            for (int dy = 0; dy <= 1; ++dy)
                for (int dx = 0; dx <= 1; ++dx) {
                    const int nx = x0 + dx, ny = y0 + dy;
                    if (nx >= 0 && ny >= 0 && nx < m.width && ny < m.height)
                        out.set(nx, ny, true);
                }
        }
    }
    return out;
}

} // namespace flowcast
