#include "flowcast/scene_io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "flowcast/io_flo.hpp"
#include "flowcast/io_image.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace flowcast::scene_io {

namespace {

std::string num4(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d", i);
    return buf;
}

std::string obj2(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "obj%02d", i);
    return buf;
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot open " + p.string());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::trunc);
    if (!out) throw IoError("cannot open " + p.string());
    out << text;
    if (!out) throw IoError("write failed for " + p.string());
}

} // namespace

SceneManifest manifest_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(std::string("gt.json: ") + e.what());
    }
    SceneManifest m;
    try {
        m.fps = j.at("fps").get<double>();
        m.input_count = j.at("input_count").get<int>();
        m.total_count = j.at("total_count").get<int>();
    } catch (const json::exception& e) {
        throw IoError(std::string("gt.json: ") + e.what());
    }
    return m;
}

std::string manifest_to_json(const SceneManifest& m) {
    json j;
    j["fps"] = m.fps;
    j["input_count"] = m.input_count;
    j["total_count"] = m.total_count;
    return j.dump(2) + "\n";
}

void write_scene(const SceneSequence& scene, const std::string& dir,
                 const std::vector<std::vector<Mask>>& sprite_masks,
                 const std::string& spec_json) {
    scene.validate(false);
    const fs::path root(dir);
    std::error_code ec;
    fs::create_directories(root / "frames", ec);
    fs::create_directories(root / "flow", ec);
    if (ec) throw IoError("cannot create scene directory " + dir);

    for (size_t i = 0; i < scene.frames.size(); ++i)
        write_png((root / "frames" / (num4(static_cast<int>(i)) + ".png")).string(),
                  scene.frames[i]);
    for (size_t i = 0; i < scene.flows_fwd.size(); ++i)
        write_flo((root / "flow" / (num4(static_cast<int>(i)) + ".flo")).string(),
                  scene.flows_fwd[i]);

    for (size_t s = 0; s < sprite_masks.size(); ++s) {
        const fs::path mdir = root / "masks" / obj2(static_cast<int>(s));
        fs::create_directories(mdir, ec);
        for (size_t i = 0; i < sprite_masks[s].size(); ++i)
            write_mask_png((mdir / (num4(static_cast<int>(i)) + ".png")).string(),
                           sprite_masks[s][i]);
    }

    if (!scene.ref_back_flows.empty()) {
        fs::create_directories(root / "ref_flow", ec);
        fs::create_directories(root / "ref_conf", ec);
        for (size_t k = 0; k < scene.ref_back_flows.size(); ++k) {
            const int abs = scene.manifest.input_count + static_cast<int>(k);
            write_flo((root / "ref_flow" / (num4(abs) + ".flo")).string(),
                      scene.ref_back_flows[k]);
            write_mask_png((root / "ref_conf" / (num4(abs) + ".png")).string(),
                           scene.ref_confidence[k]);
        }
    }

    json j = json::parse(manifest_to_json(scene.manifest));
    if (!spec_json.empty()) j["spec"] = json::parse(spec_json);
    write_text(root / "gt.json", j.dump(2) + "\n");
}

SceneSequence read_scene(const std::string& dir, bool inputs_only) {
    const fs::path root(dir);
    if (!fs::exists(root / "gt.json")) throw IoError("no gt.json under " + dir);
    SceneSequence scene;
    scene.manifest = manifest_from_json(read_text(root / "gt.json"));

    const int want = inputs_only ? scene.manifest.input_count : scene.manifest.total_count;
    for (int i = 0; i < want; ++i) {
        const fs::path p = root / "frames" / (num4(i) + ".png");
        if (!fs::exists(p)) {
            if (i >= scene.manifest.input_count) break; // future frames may be absent
            throw IoError("missing frame " + p.string());
        }
        scene.frames.push_back(read_png(p.string()));
    }
    const int nflows = static_cast<int>(scene.frames.size()) - 1;
    for (int i = 0; i < nflows; ++i) {
        const fs::path p = root / "flow" / (num4(i) + ".flo");
        if (!fs::exists(p)) {
            if (i >= scene.manifest.input_count - 1) break;
            throw IoError("missing flow " + p.string());
        }
        FlowField f = read_flo(p.string());
        f.from = i;
        f.to = i + 1;
        scene.flows_fwd.push_back(std::move(f));
    }

    // Union the per-object masks into one moving mask per frame.
    if (fs::exists(root / "masks")) {
        std::vector<fs::path> objs;
        for (const auto& e : fs::directory_iterator(root / "masks"))
            if (e.is_directory()) objs.push_back(e.path());
        std::sort(objs.begin(), objs.end());
        if (!objs.empty()) {
            for (size_t i = 0; i < scene.frames.size(); ++i) {
                Mask u(scene.frames[i].width, scene.frames[i].height);
                for (const fs::path& o : objs) {
                    const fs::path p = o / (num4(static_cast<int>(i)) + ".png");
                    if (fs::exists(p)) u = mask_or(u, read_mask_png(p.string()));
                }
                scene.gt_masks.push_back(std::move(u));
            }
        }
    }

    if (!inputs_only && fs::exists(root / "ref_flow")) {
        const int horizon = scene.manifest.total_count - scene.manifest.input_count;
        for (int k = 0; k < horizon; ++k) {
            const int abs = scene.manifest.input_count + k;
            const fs::path pf = root / "ref_flow" / (num4(abs) + ".flo");
            const fs::path pc = root / "ref_conf" / (num4(abs) + ".png");
            if (!fs::exists(pf) || !fs::exists(pc)) break;
            FlowField f = read_flo(pf.string());
            f.from = abs;
            f.to = scene.manifest.input_count - 1;
            scene.ref_back_flows.push_back(std::move(f));
            scene.ref_confidence.push_back(read_mask_png(pc.string()));
        }
        if (scene.ref_confidence.size() != scene.ref_back_flows.size() ||
            (!scene.ref_back_flows.empty() &&
             static_cast<int>(scene.ref_back_flows.size()) != horizon)) {
            scene.ref_back_flows.clear();
            scene.ref_confidence.clear();
        }
    }

    scene.validate(false);
    return scene;
}

} // namespace flowcast::scene_io
