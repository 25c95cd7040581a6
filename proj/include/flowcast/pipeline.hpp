#pragma once

#include <string>
#include <vector>

#include "flowcast/background.hpp"
#include "flowcast/compose.hpp"
#include "flowcast/decompose.hpp"
#include "flowcast/energy.hpp"
#include "flowcast/objects.hpp"
#include "flowcast/scene.hpp"

namespace flowcast::pipeline {

struct PipelineParams {
    int horizon = 5;
    int passes = 1; // recurrent applications; total prediction = horizon * passes
    background::ModelOrder model_order = background::ModelOrder::Linear;
    decompose::DecomposeParams decompose;
    objects::TrajectoryObjective trajectory;
    energy::EnergyWeights energy;

    void validate() const;
};

/// Everything one prediction pass produces, kept for inspection. Timings are
/// in-memory only; serialization never includes them so outputs stay
/// byte-stable across machines and thread counts.
struct PredictionResult {
    std::vector<Frame> frames;         // t+1 .. t+horizon*passes
    std::vector<FlowField> back_flows; // background flows (t+k) -> t, first pass
    std::vector<FlowField> fwd_flows;  // background flows t -> (t+k), first pass
    decompose::Decomposition decomposition;       // first pass
    std::vector<std::vector<objects::CenteredAffine>> past_poses;   // per track
    std::vector<std::vector<objects::CenteredAffine>> future_poses; // per track
    std::vector<compose::CompositeFrame> composites;
    energy::EnergyReport energy; // reference-free terms (smooth + consistency)
    std::vector<std::pair<std::string, double>> timings; // stage -> seconds
};

/// The separate-predict-composite pipeline on the observed frames of a
/// scene. With passes > 1 the synthesized frames are fed back as inputs
/// (flows between them come from the predicted motions) and the pipeline
/// reruns, extending the prediction.
PredictionResult predict(const SceneSequence& scene, const PipelineParams& params);

/// Write predictions under `dir`: pred/%04d.png named by absolute frame
/// index, pred_flow/%04d.flo (background backward flows), and
/// pred/manifest.json (parameters, per-track poses, energy report).
/// Byte-identical across runs and thread counts. With dump_intermediates,
/// also writes the static background, moving masks, and provenance maps.
void write_prediction(const PredictionResult& r, const SceneSequence& scene,
                      const PipelineParams& params, const std::string& dir,
                      bool dump_intermediates = false);

std::string energy_report_to_json(const energy::EnergyReport& report);

} // namespace flowcast::pipeline
