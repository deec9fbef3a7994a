#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "fsdml/data.hpp"
#include "fsdml/dml.hpp"
#include "fsdml/eval.hpp"
#include "fsdml/gan.hpp"
#include "fsdml/synth.hpp"

namespace fsdml {

/// Every tunable of an end-to-end experiment.
struct PipelineConfig {
    SynthBenchConfig bench;
    SplitSpec split;
    ClassifierConfig classifier;
    GanConfig gan;
    DmlConfig dml;
    int per_record = 1;
    bool standardize = false;
};

/// Ground and game corpora plus the stratified real-aerial split.
struct BenchmarkData {
    Dataset ground;
    Dataset game;
    Split real;
};

BenchmarkData prepare_benchmark(const PipelineConfig& config);

/// Reads ground.jsonl / real_aerial.jsonl / game_aerial.jsonl from `dir` and
/// splits the real aerial records.
BenchmarkData load_benchmark(const std::filesystem::path& dir, const SplitSpec& split);

bool needs_generated(DmlMode mode);
bool needs_games(DmlMode mode);

struct ModeOutcome {
    DmlMode mode = DmlMode::baseline;
    EvalReport report;
    std::vector<DmlEpochLog> log;
    int best_epoch = -1;
    std::optional<DmlTrainResult> model; ///< kept only when requested
};

struct CellResult {
    int k = 0;
    std::uint64_t seed = 0;
    Dataset few;
    std::optional<Dataset> generated;
    std::vector<GanLossReport> gan_log;
    std::vector<ModeOutcome> outcomes;

    const ModeOutcome& outcome(DmlMode mode) const;
};

/// One (k, seed) cell: k-shot sample, then (if any mode needs it) classifier
/// pre-training, GAN training and synthesis, then one DML run per mode and an
/// evaluation on the test split. The combined mode warm-starts from the games
/// run of the same cell, which is trained once and shared.
CellResult run_cell(const BenchmarkData& data, const PipelineConfig& config, std::span<const DmlMode> modes, int k,
                    std::uint64_t seed, bool keep_models = false);

/// Runs every (k, seed) cell, up to `threads` at a time, and aggregates one
/// curve per mode in the order given. Throws DatasetError before any training
/// if some k exceeds the smallest class of the training split.
std::vector<KShotCurve> kshot_sweep(const BenchmarkData& data, const PipelineConfig& config, std::vector<int> ks,
                                    std::span<const std::uint64_t> seeds, std::span<const DmlMode> modes,
                                    int threads = 1, std::vector<CellResult>* cells = nullptr);

} // namespace fsdml
