#pragma once

#include <string>

#include "flowcast/scene.hpp"

namespace flowcast::scene_io {

/// On-disk scene layout, rooted at `dir`:
///   frames/%04d.png        one per frame, indexed from 0
///   flow/%04d.flo          forward flow i -> i+1
///   masks/obj%02d/%04d.png ground-truth sprite masks (optional)
///   ref_flow/%04d.flo      exact backward flow (t+k) -> t, named by t+k (optional)
///   ref_conf/%04d.png      confidence for ref_flow (optional)
///   gt.json                manifest: fps, input_count, total_count, spec
/// `sprite_masks` is indexed [sprite][frame]; `spec_json`, when nonempty, is
/// embedded in gt.json so the scene can be regenerated.
void write_scene(const SceneSequence& scene, const std::string& dir,
                 const std::vector<std::vector<Mask>>& sprite_masks = {},
                 const std::string& spec_json = "");

/// Read a scene directory. Optional pieces absent on disk stay empty.
/// `inputs_only` skips future frames even when present.
SceneSequence read_scene(const std::string& dir, bool inputs_only = false);

/// Parse/serialize just the gt.json manifest.
SceneManifest manifest_from_json(const std::string& text);
std::string manifest_to_json(const SceneManifest& m);

} // namespace flowcast::scene_io
