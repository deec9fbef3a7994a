#include "fsdml/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "fsdml/errors.hpp"
#include "fsdml/rng.hpp"

namespace fsdml {

BenchmarkData prepare_benchmark(const PipelineConfig& config)
{
    SynthBench bench = synth_benchmark(config.bench);
    return BenchmarkData{std::move(bench.ground), std::move(bench.game_aerial), split(bench.real_aerial, config.split)};
}

BenchmarkData load_benchmark(const std::filesystem::path& dir, const SplitSpec& spec)
{
    Dataset ground = load_dataset(dir / "ground.jsonl");
    Dataset aerial = load_dataset(dir / "real_aerial.jsonl");
    Dataset game = load_dataset(dir / "game_aerial.jsonl");
    return BenchmarkData{std::move(ground), std::move(game), split(aerial, spec)};
}

bool needs_generated(DmlMode mode)
{
    return mode == DmlMode::generated || mode == DmlMode::games_plus_generated;
}

bool needs_games(DmlMode mode)
{
    return mode == DmlMode::games || mode == DmlMode::games_plus_generated;
}

const ModeOutcome& CellResult::outcome(DmlMode mode) const
{
    for (const auto& o : outcomes)
        if (o.mode == mode) return o;
    throw InputError("cell has no result for mode " + to_string(mode));
}

CellResult run_cell(const BenchmarkData& data, const PipelineConfig& config, std::span<const DmlMode> modes, int k,
                    std::uint64_t seed, bool keep_models)
{
    CellResult cell;
    cell.k = k;
    cell.seed = seed;
    cell.few = kshot_sample(data.real.train, k, derive_seed(seed, "kshot"));

    Dataset ground = data.ground;
    Dataset game = data.game;
    Dataset val = data.real.val;
    Dataset test = data.real.test;
    if (config.standardize) {
        const Standardizer st = Standardizer::fit({ground, cell.few});
        ground = st.apply(ground);
        game = st.apply(game);
        val = st.apply(val);
        test = st.apply(test);
        cell.few = st.apply(cell.few);
    }

    const bool want_gen = std::any_of(modes.begin(), modes.end(), needs_generated);
    if (want_gen) {
        const ParamBundle cls = pretrain_classifier(cell.few, config.classifier, derive_seed(seed, "classifier"));
        GanTrainResult gan = train_wcgan(ground, cell.few, cls, config.gan, derive_seed(seed, "gan"));
        cell.gan_log = std::move(gan.log);
        cell.generated = synthesize_features(gan.model, ground, config.per_record, derive_seed(seed, "synthesize"));
    }

    const std::uint64_t dml_seed = derive_seed(seed, "dml");
    DmlInputs inputs{cell.few, val, game, cell.generated, std::nullopt};
    std::optional<DmlTrainResult> games_run;
    auto games_result = [&]() -> const DmlTrainResult& {
        if (!games_run) games_run = train_dml(DmlMode::games, inputs, config.dml, dml_seed);
        return *games_run;
    };

    for (DmlMode mode : modes) {
        DmlTrainResult run;
        if (mode == DmlMode::games) {
            run = games_result();
        } else if (mode == DmlMode::games_plus_generated) {
            DmlInputs combined = inputs;
            combined.warm_source = games_result().net;
            run = train_dml(mode, combined, config.dml, dml_seed);
            run.games_stage_log = games_result().log;
        } else {
            run = train_dml(mode, inputs, config.dml, dml_seed);
        }
        ModeOutcome o;
        o.mode = mode;
        o.report = evaluate(run.net, test, config.dml.ensemble_heads);
        o.report.mode = to_string(mode);
        o.report.seeds = {seed};
        o.log = run.log;
        o.best_epoch = run.best_epoch;
        if (keep_models) o.model = std::move(run);
        cell.outcomes.push_back(std::move(o));
    }
    return cell;
}

std::vector<KShotCurve> kshot_sweep(const BenchmarkData& data, const PipelineConfig& config, std::vector<int> ks,
                                    std::span<const std::uint64_t> seeds, std::span<const DmlMode> modes, int threads,
                                    std::vector<CellResult>* cells_out)
{
    if (ks.empty() || seeds.empty() || modes.empty()) throw InputError("kshot_sweep needs ks, seeds and modes");
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    const auto counts = data.real.train.class_counts();
    if (counts.empty()) throw DatasetError("training split is empty");
    const std::size_t smallest = *std::min_element(counts.begin(), counts.end());
    if (ks.front() < 1) throw InputError("k must be at least 1");
    if (static_cast<std::size_t>(ks.back()) > smallest)
        throw DatasetError("k=" + std::to_string(ks.back()) + " exceeds the smallest training class (" +
                           std::to_string(smallest) + " records)");

    struct Job {
        int k;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (int k : ks)
        for (auto s : seeds) jobs.push_back({k, s});

    std::vector<std::optional<CellResult>> results(jobs.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&]() {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            try {
                results[i] = run_cell(data, config, modes, jobs[i].k, jobs[i].seed);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const int n_threads = std::clamp(threads, 1, static_cast<int>(jobs.size()));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<KShotCurve> curves;
    for (DmlMode mode : modes) {
        KShotCurve curve{to_string(mode), {}};
        for (int k : ks) {
            std::vector<double> acc;
            for (std::size_t i = 0; i < jobs.size(); ++i)
                if (jobs[i].k == k) acc.push_back(results[i]->outcome(mode).report.overall_accuracy);
            const auto [mean, sd] = mean_std(acc);
            curve.points.push_back({k, mean, sd});
        }
        curves.push_back(std::move(curve));
    }
    if (cells_out) {
        cells_out->clear();
        for (auto& r : results) cells_out->push_back(std::move(*r));
    }
    return curves;
}

} // namespace fsdml
