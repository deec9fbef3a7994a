// fsdml: command-line front end for the few-shot aerial action pipeline.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include "fsdml/config.hpp"
#include "fsdml/errors.hpp"
#include "fsdml/gradcheck_suite.hpp"
#include "fsdml/model_io.hpp"
#include "fsdml/pipeline.hpp"
#include "fsdml/rng.hpp"

namespace fs = std::filesystem;
using namespace fsdml;

namespace {

struct Flags {
    std::string config_file;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
};

void add_config_flags(CLI::App& sub, Flags& flags)
{
    sub.add_option("--config", flags.config_file, "key = value file; flags override it");
    for (const auto& k : config_keys())
        flags.options[k.name] = sub.add_option("--" + k.name, flags.values[k.name], k.help);
}

RunConfig resolve(const Flags& flags)
{
    RunConfig cfg;
    if (!flags.config_file.empty()) apply_config_file(cfg, flags.config_file);
    for (const auto& [name, opt] : flags.options)
        if (opt->count() > 0) set_config_value(cfg, name, flags.values.at(name));
    validate(cfg);
    return cfg;
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
}

fs::path prepare_out(const RunConfig& cfg)
{
    const fs::path out = cfg.out;
    fs::create_directories(out);
    write_text(out / "run_config.txt", format_config(cfg));
    return out;
}

const std::string& need(const std::string& path, const char* key)
{
    if (path.empty()) throw ConfigError(std::string("--") + key + " is required");
    return path;
}

Dataset load_with_labels(const std::string& path, const std::vector<std::string>& labels)
{
    Dataset d = load_dataset(path);
    return Dataset(d.records(), labels);
}

CheckpointStamp stamp(const RunConfig& cfg, const char* command)
{
    return {std::string("fsdml ") + command, cfg.seed, config_hash(cfg)};
}

int cmd_synth_data(RunConfig cfg)
{
    cfg.pipeline.bench.seed = cfg.seed;
    const fs::path out = prepare_out(cfg);
    const SynthBench b = synth_benchmark(cfg.pipeline.bench);
    save_dataset(b.ground, out / "ground.jsonl");
    save_dataset(b.real_aerial, out / "real_aerial.jsonl");
    save_dataset(b.game_aerial, out / "game_aerial.jsonl");
    const Split s = split(b.real_aerial, cfg.pipeline.split);
    save_dataset(s.train, out / "real_train.jsonl");
    save_dataset(s.val, out / "real_val.jsonl");
    save_dataset(s.test, out / "real_test.jsonl");
    const Dataset few = kshot_sample(s.train, cfg.k, derive_seed(cfg.seed, "kshot"));
    save_dataset(few, out / "real_fewshot.jsonl");
    std::printf("ground %zu, real aerial %zu (train %zu / val %zu / test %zu, %d-shot %zu), game %zu -> %s\n",
                b.ground.size(), b.real_aerial.size(), s.train.size(), s.val.size(), s.test.size(), cfg.k, few.size(),
                b.game_aerial.size(), out.string().c_str());
    return 0;
}

int cmd_train_gan(const RunConfig& cfg)
{
    const Dataset ground = load_dataset(need(cfg.ground, "ground"));
    const Dataset few = load_with_labels(need(cfg.real, "real"), ground.label_space());
    const fs::path out = prepare_out(cfg);
    const ParamBundle cls = pretrain_classifier(few, cfg.pipeline.classifier, derive_seed(cfg.seed, "classifier"));
    const GanTrainResult gan = train_wcgan(ground, few, cls, cfg.pipeline.gan, derive_seed(cfg.seed, "gan"));
    save_checkpoint(gan_checkpoint(gan.model, cls, ground.label_space(), stamp(cfg, "train-gan")), out / "gan.ckpt.json");
    write_text(out / "gan_log.csv", format_gan_log(gan.log));
    std::printf("%lld critic / %lld generator steps -> %s\n", static_cast<long long>(gan.critic_steps),
                static_cast<long long>(gan.generator_steps), (out / "gan.ckpt.json").string().c_str());
    return 0;
}

int cmd_generate(const RunConfig& cfg)
{
    const LoadedGan gan = gan_from_checkpoint(load_checkpoint(need(cfg.checkpoint, "checkpoint")));
    const Dataset ground = load_with_labels(need(cfg.ground, "ground"), gan.labels);
    const fs::path out = prepare_out(cfg);
    const Dataset gen =
        synthesize_features(gan.model, ground, cfg.pipeline.per_record, derive_seed(cfg.seed, "synthesize"));
    save_dataset(gen, out / "generated.jsonl");
    std::printf("%zu generated records -> %s\n", gen.size(), (out / "generated.jsonl").string().c_str());
    return 0;
}

int cmd_train_dml(const RunConfig& cfg)
{
    const DmlMode mode = cfg.mode;
    const Dataset real = load_dataset(need(cfg.real, "real"));
    const auto& labels = real.label_space();
    DmlInputs in{real, cfg.val.empty() ? Dataset({}, labels) : load_with_labels(cfg.val, labels), std::nullopt,
                 std::nullopt, std::nullopt};

    if (mode == DmlMode::baseline) {
        if (!cfg.games.empty() || !cfg.generated.empty() || !cfg.warm_start.empty())
            std::fprintf(stderr, "WARNING: mode baseline ignores --games, --generated and --warm-start\n");
    } else {
        if (needs_games(mode)) in.games = load_dataset(need(cfg.games, "games"));
        if (needs_generated(mode)) in.generated = load_with_labels(need(cfg.generated, "generated"), labels);
    }
    if (!cfg.warm_start.empty() && mode != DmlMode::baseline) {
        if (mode != DmlMode::games_plus_generated)
            throw ConfigError("--warm-start only applies to mode games_plus_generated");
        const LoadedDml src = dml_from_checkpoint(load_checkpoint(cfg.warm_start));
        if (src.real_labels != labels) throw ConfigError("warm-start checkpoint has a different real label space");
        in.warm_source = src.net;
    }
    const fs::path out = prepare_out(cfg);
    const DmlTrainResult r = train_dml(mode, in, cfg.pipeline.dml, derive_seed(cfg.seed, "dml"));

    const std::vector<std::string> aux_labels = mode == DmlMode::games ? in.games->label_space() : labels;
    save_checkpoint(dml_checkpoint(r.net, &r.adam, labels, aux_labels, mode, stamp(cfg, "train-dml")),
                    out / "dml.ckpt.json");
    write_text(out / "dml_log.csv", format_dml_log(r.log));
    if (mode == DmlMode::games_plus_generated && r.games_stage && !in.warm_source) {
        save_checkpoint(dml_checkpoint(*r.games_stage, nullptr, labels, in.games->label_space(), DmlMode::games,
                                       stamp(cfg, "train-dml")),
                        out / "dml_games.ckpt.json");
        write_text(out / "dml_games_log.csv", format_dml_log(r.games_stage_log));
    }
    std::printf("mode %s: best epoch %d, validation accuracy %.4f -> %s\n", to_string(mode).c_str(), r.best_epoch,
                r.best_val_accuracy, (out / "dml.ckpt.json").string().c_str());
    return 0;
}

int cmd_evaluate(const RunConfig& cfg)
{
    const Checkpoint ckpt = load_checkpoint(need(cfg.checkpoint, "checkpoint"));
    const LoadedDml dml = dml_from_checkpoint(ckpt);
    const Dataset test = load_with_labels(need(cfg.test, "test"), dml.real_labels);
    const fs::path out = prepare_out(cfg);
    EvalReport report = evaluate(dml.net, test, cfg.pipeline.dml.ensemble_heads);
    report.mode = to_string(dml.mode);
    report.seeds = {ckpt.seed};
    report.config_hash = ckpt.config_hash;
    write_text(out / "report.csv", format_report_csv(report));
    write_text(out / "report.txt", format_report_text(report));
    std::printf("overall accuracy %.4f on %lld records\n", report.overall_accuracy,
                static_cast<long long>(report.total()));
    return 0;
}

int thread_cap()
{
    int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("FEWSHOT_DML_THREADS")) {
        const int cap = std::atoi(env);
        if (cap < 1) throw ConfigError("FEWSHOT_DML_THREADS must be a positive integer");
        n = std::min(n, cap);
    }
    return n;
}

int cmd_kshot_sweep(const RunConfig& cfg)
{
    const BenchmarkData data =
        cfg.data_dir.empty() ? prepare_benchmark(cfg.pipeline) : load_benchmark(cfg.data_dir, cfg.pipeline.split);
    const fs::path out = prepare_out(cfg);
    std::vector<CellResult> cells;
    const auto curves = kshot_sweep(data, cfg.pipeline, cfg.ks, cfg.seeds, cfg.modes, thread_cap(), &cells);
    for (const auto& c : curves) write_text(out / ("curve_" + c.mode + ".csv"), format_curve_csv(c));
    write_text(out / "curves.dat", format_curves_gnuplot(curves));

    std::string table = "k,seed,mode,accuracy\n";
    char buf[160];
    for (const auto& cell : cells)
        for (const auto& o : cell.outcomes) {
            std::snprintf(buf, sizeof buf, "%d,%llu,%s,%.17g\n", cell.k, static_cast<unsigned long long>(cell.seed),
                          to_string(o.mode).c_str(), o.report.overall_accuracy);
            table += buf;
        }
    write_text(out / "cells.csv", table);
    for (const auto& c : curves)
        for (const auto& p : c.points) std::printf("%-22s k=%-3d %.4f +- %.4f\n", c.mode.c_str(), p.k, p.mean, p.std);
    return 0;
}

int cmd_gradcheck(const RunConfig& cfg)
{
    const fs::path out = prepare_out(cfg);
    const auto cases = run_gradcheck_suite();
    const std::string table = format_gradcheck_table(cases);
    write_text(out / "gradcheck.csv", table);
    std::fputs(table.c_str(), stdout);
    bool ok = true;
    for (const auto& c : cases) ok = ok && c.passed();
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"few-shot aerial action classification: conditional WGAN-GP feature synthesis and disjoint multitask "
                 "learning"};
    app.require_subcommand(1);

    struct Command {
        const char* name;
        const char* help;
        int (*run)(const RunConfig&);
    };
    static const Command commands[] = {
        {"synth-data", "write the synthetic benchmark, its split and a k-shot sample",
         [](const RunConfig& c) { return cmd_synth_data(c); }},
        {"train-gan", "pre-train the classifier and train the conditional WGAN-GP (--ground, --real)", cmd_train_gan},
        {"generate", "synthesize aerial features from ground records (--checkpoint, --ground)", cmd_generate},
        {"train-dml", "train the multitask network (--mode, --real, --val, --games, --generated, --warm-start)",
         cmd_train_dml},
        {"evaluate", "score a multitask checkpoint on real aerial test data (--checkpoint, --test)", cmd_evaluate},
        {"kshot-sweep", "accuracy versus k over seeds for each mode (--ks, --seeds, --modes, --data-dir)",
         cmd_kshot_sweep},
        {"gradcheck", "finite-difference check of every training loss", cmd_gradcheck},
    };

    std::map<std::string, Flags> flags;
    for (const auto& c : commands) add_config_flags(*app.add_subcommand(c.name, c.help), flags[c.name]);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    for (const auto& c : commands) {
        if (!app.got_subcommand(c.name)) continue;
        try {
            return c.run(resolve(flags.at(c.name)));
        } catch (const std::exception& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return 2;
        }
    }
    return 2;
}
