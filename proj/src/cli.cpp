#include "flowcast/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "flowcast/io_flo.hpp"
#include "flowcast/io_image.hpp"
#include "flowcast/metrics.hpp"
#include "flowcast/parallel.hpp"
#include "flowcast/pipeline.hpp"
#include "flowcast/scene_io.hpp"
#include "flowcast/synth.hpp"
#include "flowcast/viz.hpp"

namespace flowcast::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string num4(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d", i);
    return buf;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Fill `target` from a (possibly nested) config key unless the flag was
// given explicitly on the command line: flags win over the config file.
template <typename T>
void config_fill(const json& cfg, const CLI::Option* opt, T& target, const char* group,
                 const char* key) {
    if (opt != nullptr && opt->count() > 0) return;
    const json* node = &cfg;
    if (group != nullptr) {
        const auto it = cfg.find(group);
        if (it == cfg.end()) return;
        node = &*it;
    }
    const auto it = node->find(key);
    if (it == node->end()) return;
    target = it->get<T>();
}

void apply_threads(const CLI::Option* opt, int threads) {
    if ((opt == nullptr || opt->count() == 0) && threads <= 0) {
        if (const char* env = std::getenv("FLOWCAST_THREADS")) threads = std::atoi(env);
    }
    if (threads > 0) set_thread_count(threads);
}

struct GenerateArgs {
    std::string spec_file, preset_name, out_dir;
    uint32_t seed = 7;
    double flow_sigma = 0.0;
    int threads = 0;
    CLI::Option *seed_opt = nullptr, *threads_opt = nullptr;
};

int cmd_generate(const GenerateArgs& a) {
    apply_threads(a.threads_opt, a.threads);
    require(a.spec_file.empty() != a.preset_name.empty(),
            "generate: give exactly one of --spec or --preset");
    synth::SceneSpec spec = a.spec_file.empty() ? synth::preset(a.preset_name, a.seed)
                                                : synth::spec_from_json(slurp(a.spec_file));
    if (a.seed_opt != nullptr && a.seed_opt->count() > 0) spec.seed = a.seed;
    synth::GeneratedScene g = synth::generate(spec);
    if (a.flow_sigma > 0.0)
        g.scene.flows_fwd =
            synth::perturb_flows(g.scene.flows_fwd, a.flow_sigma, spec.seed ^ 0x5bf03635u);
    scene_io::write_scene(g.scene, a.out_dir, g.sprite_masks, synth::spec_to_json(spec));
    std::cout << "wrote " << g.scene.frames.size() << " frames to " << a.out_dir << "\n";
    return 0;
}

struct PredictArgs {
    std::string scene_dir, out_dir, config_file;
    pipeline::PipelineParams params;
    int input_count = 0; // 0 = use the scene manifest
    int threads = 0;
    bool dump = false;
    // Options that may be overridden by --config when absent on the line.
    CLI::Option *horizon_opt = nullptr, *passes_opt = nullptr, *order_opt = nullptr;
    CLI::Option *tau_opt = nullptr, *min_area_opt = nullptr, *track_ssim_opt = nullptr;
    CLI::Option *t_opt = nullptr, *threads_opt = nullptr, *dump_opt = nullptr;
    std::string model_order = "linear";
};

void apply_predict_config(PredictArgs& a) {
    if (a.config_file.empty()) return;
    const json cfg = json::parse(slurp(a.config_file));
    config_fill(cfg, a.horizon_opt, a.params.horizon, nullptr, "horizon");
    config_fill(cfg, a.passes_opt, a.params.passes, nullptr, "passes");
    config_fill(cfg, a.order_opt, a.model_order, nullptr, "model_order");
    config_fill(cfg, a.t_opt, a.input_count, nullptr, "input_count");
    config_fill(cfg, a.threads_opt, a.threads, nullptr, "threads");
    bool dump = a.dump;
    config_fill(cfg, a.dump_opt, dump, nullptr, "dump_intermediates");
    a.dump = dump;
    config_fill(cfg, a.tau_opt, a.params.decompose.tau_move, "decompose", "tau_move");
    config_fill(cfg, nullptr, a.params.decompose.reweight_rounds, "decompose", "reweight_rounds");
    config_fill(cfg, nullptr, a.params.decompose.inlier_radius, "decompose", "inlier_radius");
    config_fill(cfg, a.min_area_opt, a.params.decompose.min_area, "decompose", "min_area");
    config_fill(cfg, a.track_ssim_opt, a.params.decompose.track_ssim, "decompose", "track_ssim");
    config_fill(cfg, nullptr, a.params.trajectory.lambda_fit, "trajectory", "lambda_fit");
    config_fill(cfg, nullptr, a.params.trajectory.lambda_reg, "trajectory", "lambda_reg");
    config_fill(cfg, nullptr, a.params.trajectory.lambda_smooth, "trajectory", "lambda_smooth");
    config_fill(cfg, nullptr, a.params.trajectory.iterations, "trajectory", "iterations");
    config_fill(cfg, nullptr, a.params.trajectory.step, "trajectory", "step");
    config_fill(cfg, nullptr, a.params.trajectory.huber_delta, "trajectory", "huber_delta");
    config_fill(cfg, nullptr, a.params.trajectory.min_det, "trajectory", "min_det");
    config_fill(cfg, nullptr, a.params.energy.lambda_data, "energy", "lambda_data");
    config_fill(cfg, nullptr, a.params.energy.lambda_perc, "energy", "lambda_perc");
    config_fill(cfg, nullptr, a.params.energy.lambda_smooth, "energy", "lambda_smooth");
    config_fill(cfg, nullptr, a.params.energy.lambda_cons, "energy", "lambda_cons");
    config_fill(cfg, nullptr, a.params.energy.a, "energy", "a");
    config_fill(cfg, nullptr, a.params.energy.b, "energy", "b");
}

int cmd_predict(PredictArgs& a) {
    apply_predict_config(a);
    apply_threads(a.threads_opt, a.threads);
    require(a.model_order == "linear" || a.model_order == "constant",
            "predict: model order must be linear or constant");
    a.params.model_order = a.model_order == "linear" ? background::ModelOrder::Linear
                                                     : background::ModelOrder::Constant;

    // Prediction must never see future frames, so load the input span only.
    SceneSequence full = scene_io::read_scene(a.scene_dir, /*inputs_only=*/true);
    const int t_avail = full.manifest.input_count;
    int t_used = a.input_count > 0 ? a.input_count : t_avail;
    require(t_used >= 2, "predict: need at least two input frames");
    t_used = std::min(t_used, t_avail);

    SceneSequence window = full;
    if (t_used < t_avail) { // keep the most recent frames
        const int drop = t_avail - t_used;
        window.frames.assign(full.frames.begin() + drop, full.frames.begin() + t_avail);
        window.flows_fwd.assign(full.flows_fwd.begin() + drop,
                                full.flows_fwd.begin() + (t_avail - 1));
        if (!full.gt_masks.empty())
            window.gt_masks.assign(full.gt_masks.begin() + drop,
                                   full.gt_masks.begin() + t_avail);
        window.manifest.input_count = t_used;
    }
    window.manifest.total_count = t_used; // inputs only; predictions extend it

    const pipeline::PredictionResult result = pipeline::predict(window, a.params);
    pipeline::write_prediction(result, full, a.params, a.out_dir, a.dump);
    std::cout << "wrote " << result.frames.size() << " predicted frames to " << a.out_dir
              << "\n";
    return 0;
}

struct EvalArgs {
    std::string pred_dir, truth_dir, out_dir;
    int threads = 0;
    CLI::Option* threads_opt = nullptr;
};

int cmd_eval(const EvalArgs& a) {
    apply_threads(a.threads_opt, a.threads);
    const SceneManifest m = scene_io::manifest_from_json(slurp(a.truth_dir + "/gt.json"));
    const int t = m.input_count;
    const int expected = m.total_count - m.input_count;

    fs::path pdir = fs::path(a.pred_dir) / "pred";
    if (!fs::exists(pdir)) pdir = a.pred_dir;

    std::vector<Frame> pred, truth;
    for (int k = 0;; ++k) {
        const fs::path p = pdir / (num4(t + k) + ".png");
        if (!fs::exists(p)) break;
        pred.push_back(read_frame(p.string()));
        const fs::path r = fs::path(a.truth_dir) / "frames" / (num4(t + k) + ".png");
        if (!fs::exists(r)) throw IoError("eval: missing ground-truth frame " + r.string());
        truth.push_back(read_frame(r.string()));
    }
    if (pred.empty()) throw IoError("eval: no predicted frames under " + pdir.string());
    if (static_cast<int>(pred.size()) != expected)
        throw IoError("eval: prediction/ground-truth count mismatch (" +
                      std::to_string(pred.size()) + " vs " + std::to_string(expected) + ")");

    const metrics::EvalReport rep = metrics::evaluate(pred, truth);
    const std::string out = a.out_dir.empty() ? a.pred_dir : a.out_dir;
    fs::create_directories(out);
    {
        std::ofstream jf(fs::path(out) / "eval.json", std::ios::binary);
        if (!jf) throw IoError("eval: cannot write eval.json");
        jf << metrics::report_to_json(rep);
    }
    const std::string table = metrics::report_to_table(rep);
    {
        std::ofstream tf(fs::path(out) / "eval.txt", std::ios::binary);
        if (!tf) throw IoError("eval: cannot write eval.txt");
        tf << table;
    }
    std::cout << table;
    return 0;
}

struct VizArgs {
    std::string flow_file, out_file;
    int threads = 0;
    CLI::Option* threads_opt = nullptr;
};

int cmd_viz(const VizArgs& a) {
    apply_threads(a.threads_opt, a.threads);
    write_frame(a.out_file, viz::flow_to_color(read_flo(a.flow_file)));
    std::cout << "wrote " << a.out_file << "\n";
    return 0;
}

int run_parsed(int argc, char** argv) {
    CLI::App app{"flowcast: layered video prediction from rigid motion"};
    app.require_subcommand(1);

    GenerateArgs ga;
    CLI::App* gen = app.add_subcommand("generate", "render a synthetic scene directory");
    gen->add_option("--spec", ga.spec_file, "SceneSpec JSON file");
    gen->add_option("--preset", ga.preset_name, "named preset: static|pan|zoom|orbit|mixed");
    ga.seed_opt = gen->add_option("--seed", ga.seed, "override the spec seed");
    gen->add_option("--flow-sigma", ga.flow_sigma, "Gaussian noise sigma added to stored flows");
    ga.threads_opt = gen->add_option("--threads", ga.threads, "worker thread cap");
    gen->add_option("--out", ga.out_dir, "output scene directory")->required();

    PredictArgs pa;
    CLI::App* pre = app.add_subcommand("predict", "predict future frames for a scene");
    pre->add_option("--scene", pa.scene_dir, "input scene directory")->required();
    pre->add_option("--out", pa.out_dir, "output directory")->required();
    pre->add_option("--config", pa.config_file, "JSON config; explicit flags win");
    pa.t_opt = pre->add_option("-t,--input-count", pa.input_count,
                               "number of most recent input frames to use");
    pa.horizon_opt = pre->add_option("--horizon", pa.params.horizon, "frames per pass");
    pa.passes_opt = pre->add_option("--passes", pa.params.passes, "recurrent passes");
    pa.order_opt = pre->add_option("--model-order", pa.model_order,
                                   "camera extrapolation model: linear|constant");
    pa.tau_opt = pre->add_option("--tau-move", pa.params.decompose.tau_move,
                                 "moving-object residual threshold (px)");
    pa.min_area_opt =
        pre->add_option("--min-area", pa.params.decompose.min_area, "minimum object area (px)");
    pa.track_ssim_opt = pre->add_option("--track-ssim", pa.params.decompose.track_ssim,
                                        "track identity-check threshold");
    pa.threads_opt = pre->add_option("--threads", pa.threads, "worker thread cap");
    pa.dump_opt = pre->add_flag("--dump-intermediates", pa.dump,
                                "write static background, masks, provenance, flow maps");

    EvalArgs ea;
    CLI::App* ev = app.add_subcommand("eval", "score predictions against ground truth");
    ev->add_option("--pred", ea.pred_dir, "prediction directory")->required();
    ev->add_option("--truth", ea.truth_dir, "ground-truth scene directory")->required();
    ev->add_option("--out", ea.out_dir, "report directory (default: prediction dir)");
    ea.threads_opt = ev->add_option("--threads", ea.threads, "worker thread cap");

    VizArgs va;
    CLI::App* vz = app.add_subcommand("viz", "render a .flo file as a color-wheel PNG");
    vz->add_option("--flow", va.flow_file, ".flo input")->required();
    vz->add_option("--out", va.out_file, "PNG output")->required();
    va.threads_opt = vz->add_option("--threads", va.threads, "worker thread cap");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (gen->parsed()) return cmd_generate(ga);
    if (pre->parsed()) return cmd_predict(pa);
    if (ev->parsed()) return cmd_eval(ea);
    return cmd_viz(va);
}

} // namespace

int run(int argc, char** argv) {
    try {
        return run_parsed(argc, argv);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
}

} // namespace flowcast::cli
