#pragma once

#include "sceneflow/config.hpp"
#include "sceneflow/data/scene_pair.hpp"

namespace sf::data {

// Generates a multi-object rigid-motion scene: primitive surfaces (plane,
// box, sphere) each moved by a bounded rigid transform about its centroid.
// The source frame is normalized so its bounding-box diagonal is 1. Fully
// determined by config.seed.
ScenePair synth_rigid_scene(const SynthConfig& config);

// Bounding-box diagonal of the source frame (the "scene diameter" that
// radius-type hyperparameters are expressed against).
double scene_diameter(const ScenePair& pair);

}  // namespace sf::data
