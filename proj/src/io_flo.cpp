#include "flowcast/io_flo.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace flowcast {

static constexpr float kFloMagic = 202021.25f;

FlowField read_flo(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_flo: cannot open " + path);
    float magic = 0.0f;
    int32_t w = 0, h = 0;
    in.read(reinterpret_cast<char*>(&magic), sizeof magic);
    in.read(reinterpret_cast<char*>(&w), sizeof w);
    in.read(reinterpret_cast<char*>(&h), sizeof h);
    if (!in || magic != kFloMagic) throw IoError("read_flo: bad magic in " + path);
    if (w <= 0 || h <= 0 || w > 1 << 16 || h > 1 << 16)
        throw IoError("read_flo: implausible dimensions in " + path);
    FlowField f(w, h);
    in.read(reinterpret_cast<char*>(f.v.data()),
            static_cast<std::streamsize>(f.v.size() * sizeof(float)));
    if (!in) throw IoError("read_flo: truncated data in " + path);
    return f;
}

void write_flo(const std::string& path, const FlowField& flow) {
    flow.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("write_flo: cannot open " + path);
    const int32_t w = flow.width, h = flow.height;
    out.write(reinterpret_cast<const char*>(&kFloMagic), sizeof kFloMagic);
    out.write(reinterpret_cast<const char*>(&w), sizeof w);
    out.write(reinterpret_cast<const char*>(&h), sizeof h);
    out.write(reinterpret_cast<const char*>(flow.v.data()),
              static_cast<std::streamsize>(flow.v.size() * sizeof(float)));
    if (!out) throw IoError("write_flo: write failed for " + path);
}

} // namespace flowcast
