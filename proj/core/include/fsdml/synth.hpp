#pragma once

#include <cstdint>
#include <string>

#include "fsdml/data.hpp"

namespace fsdml {

/// Desk-scale stand-in for a ground / aerial / game feature corpus.
///
/// Each real class owns a Gaussian cluster in ground feature space. All
/// domains share a low-rank "nuisance" subspace of large within-class
/// variation (viewpoint, actor, background in real footage), which is what
/// makes a k-shot classifier struggle. Aerial features are a fixed random
/// full-rank map of the ground features plus a shift and isotropic noise;
/// game classes either reuse a real class centre (offset by a game-specific
/// bias) or get a fresh centre. Everything passes through a final ReLU.
struct SynthBenchConfig {
    int num_classes = 8;
    int dim = 64;
    int ground_per_class = 100;
    int aerial_per_class = 50;
    int game_per_class = 100;
    int game_classes = 7;
    int game_overlap = 3;

    double base_level = 3.0;        ///< common offset keeping most features positive
    double class_separation = 0.5;  ///< std of class-centre coordinates around base_level
    double cluster_spread = 0.35;   ///< isotropic within-class std
    int nuisance_rank = 6;
    double nuisance_scale = 4.0;    ///< std of each nuisance coordinate
    double map_strength = 1.0;      ///< A = I + map_strength * R / sqrt(dim); 0 gives identity
    double aerial_shift = 0.5;      ///< std of the per-dimension aerial shift
    double aerial_noise = 0.2;      ///< isotropic noise added after the map
    double game_offset = 0.3;       ///< std of the per-dimension game bias
    std::uint64_t seed = 7;

    void validate() const;
};

struct SynthBench {
    Dataset ground;
    Dataset real_aerial;
    Dataset game_aerial;
};

SynthBench synth_benchmark(const SynthBenchConfig& config);

/// Label names used by the generator ("action_00", ... / "game_00", ...).
std::string real_label(int c);
std::string game_label(int c);

} // namespace fsdml
