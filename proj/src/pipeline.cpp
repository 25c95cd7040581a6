#include "flowcast/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <utility>

#include <nlohmann/json.hpp>

#include "flowcast/io_flo.hpp"
#include "flowcast/io_image.hpp"
#include "flowcast/parallel.hpp"
#include "flowcast/viz.hpp"

namespace flowcast::pipeline {

using json = nlohmann::json;

void PipelineParams::validate() const {
    require(horizon >= 1, "PipelineParams: horizon must be >= 1");
    require(passes >= 1, "PipelineParams: passes must be >= 1");
    decompose.validate();
    trajectory.validate();
    energy.validate();
}

namespace {

struct StageClock {
    std::vector<std::pair<std::string, double>>& sink;
    std::chrono::steady_clock::time_point mark = std::chrono::steady_clock::now();

    void lap(const char* name) {
        const auto now = std::chrono::steady_clock::now();
        sink.emplace_back(name, std::chrono::duration<double>(now - mark).count());
        mark = now;
    }
};

// Pixel maps of each object's step from frame (t-1+j) to (t+j): the pose
// ratio P_{j+1} o P_j^{-1}, with P_0 the identity.
std::vector<std::vector<Affine2>> object_steps(
    const std::vector<std::vector<objects::CenteredAffine>>& future,
    const std::vector<Vec2>& centers, int horizon) {
    std::vector<std::vector<Affine2>> steps(future.size());
    for (size_t i = 0; i < future.size(); ++i) {
        Affine2 prev = Affine2::identity();
        steps[i].reserve(static_cast<size_t>(horizon));
        for (int j = 0; j < horizon; ++j) {
            const Affine2 cur = future[i][static_cast<size_t>(j)].to_pixel(centers[i]);
            steps[i].push_back(concat(cur, prev.inverse()));
            prev = cur;
        }
    }
    return steps;
}

// Displacement field of `bg` everywhere except object pixels, which follow
// their own step map. `ids` gives the object index per pixel (-1 = none).
FlowField mixed_flow(const Affine2& bg, const std::vector<Affine2>& per_object,
                     const std::vector<int>& ids, int w, int h, int from, int to) {
    FlowField f(w, h);
    f.from = from;
    f.to = to;
    parallel_rows(h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            const int id = ids[static_cast<size_t>(y) * w + x];
            const Affine2& g = id >= 0 ? per_object[static_cast<size_t>(id)] : bg;
            const Vec2 q = g.apply(x, y);
            f.set(x, y, static_cast<float>(q.x - x), static_cast<float>(q.y - y));
        }
    });
    return f;
}

} // namespace

PredictionResult predict(const SceneSequence& scene, const PipelineParams& params) {
    params.validate();
    SceneSequence cur = scene.inputs_only();
    cur.validate(false);
    const int w = cur.width(), h = cur.height();
    const int t = cur.manifest.input_count;
    const int K = params.horizon;

    PredictionResult out;
    StageClock clock{out.timings};

    for (int pass = 0; pass < params.passes; ++pass) {
        decompose::Decomposition d = decompose::decompose(cur, params.decompose);
        clock.lap("decompose");

        background::MotionHistory hist{d.global, params.model_order};
        const auto fsteps = background::extrapolate_global(hist, K);
        background::BackgroundFlows bf = background::future_backward_flows(fsteps, w, h);
        const auto bg = background::predict_background(d.static_bg, bf.back);
        clock.lap("background");

        // Fit and extrapolate each track; tracks whose motion cannot be
        // fitted (support too thin) drop back to the background layer.
        std::vector<const decompose::Track*> kept;
        std::vector<std::vector<objects::CenteredAffine>> past, future;
        std::vector<Vec2> centers;
        for (const decompose::Track& tr : d.tracks) {
            std::vector<objects::CenteredAffine> p;
            try {
                p = objects::fit_past_affines(tr, cur.flows_fwd);
            } catch (const InvalidArgument&) {
                continue;
            }
            future.push_back(objects::extrapolate_trajectory(
                p, K, params.trajectory, tr.center(), tr.diagonal(), w, h));
            past.push_back(std::move(p));
            centers.push_back(tr.center());
            kept.push_back(&tr);
        }
        clock.lap("objects");

        const Frame& last = cur.frames.back();
        std::vector<compose::CompositeFrame> comps;
        comps.reserve(static_cast<size_t>(K));
        for (int k = 0; k < K; ++k) {
            std::vector<compose::PlacedObject> placed;
            placed.reserve(kept.size());
            for (size_t j = 0; j < kept.size(); ++j) {
                auto [img, m] = objects::render_object(last, kept[j]->masks.back(), centers[j],
                                                       future[j][static_cast<size_t>(k)]);
                placed.push_back({kept[j]->id, std::move(img), std::move(m),
                                  kept[j]->bottom_y, kept[j]->area});
            }
            comps.push_back(compose::paste(bg[static_cast<size_t>(k)].image,
                                           bg[static_cast<size_t>(k)].valid, placed));
        }
        clock.lap("compose");

        // Flows between consecutive synthesized frames (and from the last
        // observed one), mixing the global step with per-object steps.
        const auto osteps = object_steps(future, centers, K);
        std::map<int, int> id_to_index;
        for (size_t j = 0; j < kept.size(); ++j) id_to_index[kept[j]->id] = static_cast<int>(j);

        const auto ids_at = [&](int j) { // grid frame t-1+j
            std::vector<int> ids(static_cast<size_t>(w) * h, -1);
            if (j == 0) {
                for (size_t jj = 0; jj < kept.size(); ++jj) {
                    const Mask& m = kept[jj]->masks.back();
                    for (size_t i = 0; i < m.bits.size(); ++i)
                        if (m.bits[i]) ids[i] = static_cast<int>(jj);
                }
            } else {
                const compose::CompositeFrame& c = comps[static_cast<size_t>(j - 1)];
                for (size_t i = 0; i < ids.size(); ++i)
                    if (c.tags[i] == compose::Provenance::Object)
                        ids[i] = id_to_index.at(c.object_ids[i]);
            }
            return ids;
        };

        std::vector<FlowField> pair_fwd, pair_bwd;
        pair_fwd.reserve(static_cast<size_t>(K));
        pair_bwd.reserve(static_cast<size_t>(K));
        for (int j = 0; j < K; ++j) {
            std::vector<Affine2> ostep(kept.size()), oinv(kept.size());
            for (size_t jj = 0; jj < kept.size(); ++jj) {
                ostep[jj] = osteps[jj][static_cast<size_t>(j)];
                oinv[jj] = ostep[jj].inverse();
            }
            const Affine2& g = fsteps[static_cast<size_t>(j)];
            pair_fwd.push_back(mixed_flow(g, ostep, ids_at(j), w, h, t - 1 + j, t + j));
            pair_bwd.push_back(mixed_flow(g.inverse(), oinv, ids_at(j + 1), w, h, t + j, t - 1 + j));
        }

        // Propagate evidence between frames, seeding from the last observed
        // frame, then diffuse whatever no frame can explain.
        std::vector<compose::CompositeFrame> vin;
        vin.reserve(static_cast<size_t>(K) + 1);
        compose::CompositeFrame anchor(w, h, last.channels);
        anchor.image = last;
        std::fill(anchor.hole.bits.begin(), anchor.hole.bits.end(), uint8_t{0});
        std::fill(anchor.tags.begin(), anchor.tags.end(), compose::Provenance::Background);
        vin.push_back(std::move(anchor));
        for (auto& c : comps) vin.push_back(std::move(c));
        compose::video_inpaint(vin, pair_fwd, pair_bwd, params.energy.a, params.energy.b);
        for (int k = 0; k < K; ++k) compose::final_fill(vin[static_cast<size_t>(k) + 1]);
        clock.lap("inpaint");

        std::vector<Frame> pass_frames;
        pass_frames.reserve(static_cast<size_t>(K));
        for (int k = 0; k < K; ++k) {
            pass_frames.push_back(vin[static_cast<size_t>(k) + 1].image);
            out.composites.push_back(std::move(vin[static_cast<size_t>(k) + 1]));
        }

        if (pass == 0) {
            const int base = t - 1 + static_cast<int>(out.frames.size());
            for (int k = 0; k < K; ++k) {
                bf.back[static_cast<size_t>(k)].from = base + k + 1;
                bf.back[static_cast<size_t>(k)].to = t - 1;
                bf.fwd[static_cast<size_t>(k)].from = t - 1;
                bf.fwd[static_cast<size_t>(k)].to = base + k + 1;
            }
            out.back_flows = bf.back;
            out.fwd_flows = bf.fwd;
            out.decomposition = std::move(d);
            out.past_poses = past;
            out.future_poses = future;
            out.energy = energy::prediction_energy(out.back_flows, out.fwd_flows, pass_frames,
                                                   params.energy);
            clock.lap("energy");
        }
        for (Frame& f : pass_frames) out.frames.push_back(std::move(f));

        if (pass + 1 < params.passes) {
            // Feed the synthesized frames back as the new observation window.
            std::vector<Frame> frames = cur.frames;
            for (size_t k = out.frames.size() - K; k < out.frames.size(); ++k)
                frames.push_back(out.frames[k]);
            std::vector<FlowField> flows = cur.flows_fwd;
            for (auto& f : pair_fwd) flows.push_back(std::move(f));
            cur.frames.assign(frames.end() - t, frames.end());
            cur.flows_fwd.assign(flows.end() - (t - 1), flows.end());
            cur.gt_masks.clear();
            cur.ref_back_flows.clear();
            cur.ref_confidence.clear();
        }
    }
    return out;
}

namespace {

std::string num4(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d", i);
    return buf;
}

json affine_json(const std::array<double, 6>& a) {
    return json(a);
}

json params_json(const PipelineParams& p) {
    return json{
        {"horizon", p.horizon},
        {"passes", p.passes},
        {"model_order", p.model_order == background::ModelOrder::Linear ? "linear" : "constant"},
        {"decompose",
         {{"tau_move", p.decompose.tau_move},
          {"reweight_rounds", p.decompose.reweight_rounds},
          {"inlier_radius", p.decompose.inlier_radius},
          {"min_area", p.decompose.min_area},
          {"track_ssim", p.decompose.track_ssim}}},
        {"trajectory",
         {{"lambda_fit", p.trajectory.lambda_fit},
          {"lambda_reg", p.trajectory.lambda_reg},
          {"lambda_smooth", p.trajectory.lambda_smooth},
          {"iterations", p.trajectory.iterations},
          {"step", p.trajectory.step},
          {"huber_delta", p.trajectory.huber_delta},
          {"min_det", p.trajectory.min_det}}},
        {"energy",
         {{"lambda_data", p.energy.lambda_data},
          {"lambda_perc", p.energy.lambda_perc},
          {"lambda_smooth", p.energy.lambda_smooth},
          {"lambda_cons", p.energy.lambda_cons},
          {"a", p.energy.a},
          {"b", p.energy.b}}}};
}

json frame_energy_json(const energy::FrameEnergy& e) {
    return json{{"data", e.data},     {"perc", e.perc},   {"smooth", e.smooth},
                {"cons", e.cons},     {"total", e.total}, {"valid_frac", e.valid_frac}};
}

} // namespace

std::string energy_report_to_json(const energy::EnergyReport& report) {
    json j;
    j["frames"] = json::array();
    for (const auto& e : report.frames) j["frames"].push_back(frame_energy_json(e));
    j["totals"] = frame_energy_json(report.totals);
    return j.dump(2) + "\n";
}

void write_prediction(const PredictionResult& r, const SceneSequence& scene,
                      const PipelineParams& params, const std::string& dir,
                      bool dump_intermediates) {
    namespace fs = std::filesystem;
    const int t = scene.manifest.input_count;
    fs::create_directories(fs::path(dir) / "pred");
    fs::create_directories(fs::path(dir) / "pred_flow");

    for (size_t k = 0; k < r.frames.size(); ++k)
        write_frame((fs::path(dir) / "pred" / (num4(t + static_cast<int>(k)) + ".png")).string(),
                    r.frames[k]);
    for (size_t k = 0; k < r.back_flows.size(); ++k)
        write_flo((fs::path(dir) / "pred_flow" / (num4(t + static_cast<int>(k)) + ".flo")).string(),
                  r.back_flows[k]);

    json manifest;
    manifest["fps"] = scene.manifest.fps;
    manifest["input_count"] = t;
    manifest["predicted_count"] = r.frames.size();
    manifest["params"] = params_json(params);
    manifest["global_past"] = json::array();
    for (const Affine2& g : r.decomposition.global) manifest["global_past"].push_back(affine_json(g.a));
    manifest["tracks"] = json::array();
    for (size_t i = 0; i < r.future_poses.size(); ++i) {
        json tr;
        if (i < r.decomposition.tracks.size()) {
            const auto& track = r.decomposition.tracks[i];
            tr["id"] = track.id;
            tr["center"] = {track.center().x, track.center().y};
            tr["diagonal"] = track.diagonal();
            tr["bottom_y"] = track.bottom_y;
            tr["area"] = track.area;
        }
        tr["past"] = json::array();
        for (const auto& a : r.past_poses[i]) tr["past"].push_back(affine_json(a.p));
        tr["future"] = json::array();
        for (const auto& a : r.future_poses[i]) tr["future"].push_back(affine_json(a.p));
        manifest["tracks"].push_back(std::move(tr));
    }
    manifest["energy"] = json::parse(energy_report_to_json(r.energy));

    std::ofstream mf(fs::path(dir) / "pred" / "manifest.json", std::ios::binary);
    if (!mf) throw IoError("write_prediction: cannot write manifest.json");
    mf << manifest.dump(2) << "\n";
    mf.close();

    if (dump_intermediates) {
        const fs::path inter = fs::path(dir) / "intermediate";
        fs::create_directories(inter);
        write_frame((inter / "static_bg.png").string(), r.decomposition.static_bg);
        for (size_t i = 0; i < r.decomposition.moving.size(); ++i)
            write_mask_png((inter / ("moving_" + num4(static_cast<int>(i)) + ".png")).string(),
                           r.decomposition.moving[i]);
        for (size_t k = 0; k < r.composites.size(); ++k)
            write_frame((inter / ("prov_" + num4(t + static_cast<int>(k)) + ".png")).string(),
                        compose::provenance_image(r.composites[k]));
        for (size_t k = 0; k < r.back_flows.size(); ++k)
            write_frame((inter / ("flow_" + num4(t + static_cast<int>(k)) + ".png")).string(),
                        viz::flow_to_color(r.back_flows[k]));
    }
}

} // namespace flowcast::pipeline
