#include "fsdml/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fsdml/errors.hpp"
#include "fsdml/rng.hpp"

namespace fsdml {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <class T>
T parse_number(const std::string& s)
{
    T v{};
    const auto t = trim(s);
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || p != t.data() + t.size() || t.empty()) throw ConfigError("'" + s + "' is not a number");
    return v;
}

bool parse_bool(const std::string& s)
{
    const auto t = trim(s);
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw ConfigError("'" + s + "' is not a boolean");
}

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt(bool v) { return v ? "true" : "false"; }

template <class T>
std::string fmt_list(const std::vector<T>& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) out += ',';
        if constexpr (std::is_same_v<T, DmlMode>)
            out += to_string(v[i]);
        else
            out += std::to_string(v[i]);
    }
    return out;
}

template <class T>
std::vector<T> parse_list(const std::string& s)
{
    std::vector<T> out;
    for (const auto& item : split_list(s)) out.push_back(parse_number<T>(item));
    if (out.empty()) throw ConfigError("empty list");
    return out;
}

// Accessor shorthands for the common field kinds.
template <class F>
ConfigKey int_key(std::string name, std::string help, F field)
{
    return {std::move(name), std::move(help), false,
            [field](const RunConfig& c) { return std::to_string(field(const_cast<RunConfig&>(c))); },
            [field](RunConfig& c, const std::string& v) { field(c) = parse_number<int>(v); }};
}

template <class F>
ConfigKey u64_key(std::string name, std::string help, F field)
{
    return {std::move(name), std::move(help), false,
            [field](const RunConfig& c) { return std::to_string(field(const_cast<RunConfig&>(c))); },
            [field](RunConfig& c, const std::string& v) { field(c) = parse_number<std::uint64_t>(v); }};
}

template <class F>
ConfigKey real_key(std::string name, std::string help, F field)
{
    return {std::move(name), std::move(help), false,
            [field](const RunConfig& c) { return fmt(field(const_cast<RunConfig&>(c))); },
            [field](RunConfig& c, const std::string& v) { field(c) = parse_number<double>(v); }};
}

template <class F>
ConfigKey bool_key(std::string name, std::string help, F field)
{
    return {std::move(name), std::move(help), false,
            [field](const RunConfig& c) { return fmt(field(const_cast<RunConfig&>(c))); },
            [field](RunConfig& c, const std::string& v) { field(c) = parse_bool(v); }};
}

template <class F>
ConfigKey hidden_key(std::string name, std::string help, F field)
{
    return {std::move(name), std::move(help), false,
            [field](const RunConfig& c) { return fmt_list(field(const_cast<RunConfig&>(c))); },
            [field](RunConfig& c, const std::string& v) { field(c) = parse_list<int>(v); }};
}

template <class F>
ConfigKey path_key(std::string name, std::string help, F field)
{
    return {std::move(name), std::move(help), true,
            [field](const RunConfig& c) { return field(const_cast<RunConfig&>(c)); },
            [field](RunConfig& c, const std::string& v) { field(c) = trim(v); }};
}

// Keys that set the same hyperparameter on every optimizer.
template <class F>
ConfigKey all_adam_key(std::string name, std::string help, F field)
{
    return {std::move(name), std::move(help), false,
            [field](const RunConfig& c) { return fmt(field(const_cast<RunConfig&>(c).pipeline.dml.adam)); },
            [field](RunConfig& c, const std::string& v) {
                const double x = parse_number<double>(v);
                auto& p = c.pipeline;
                field(p.classifier.adam) = x;
                field(p.gan.critic_adam) = x;
                field(p.gan.generator_adam) = x;
                field(p.dml.adam) = x;
            }};
}

template <class F>
ConfigKey gan_adam_key(std::string name, std::string help, F field)
{
    return {std::move(name), std::move(help), false,
            [field](const RunConfig& c) { return fmt(field(const_cast<RunConfig&>(c).pipeline.gan.critic_adam)); },
            [field](RunConfig& c, const std::string& v) {
                const double x = parse_number<double>(v);
                field(c.pipeline.gan.critic_adam) = x;
                field(c.pipeline.gan.generator_adam) = x;
            }};
}

std::vector<ConfigKey> build_registry()
{
    std::vector<ConfigKey> r;
    // run
    r.push_back(u64_key("seed", "master seed of the command", [](RunConfig& c) -> auto& { return c.seed; }));
    r.push_back({"seeds", "seeds of a k-shot sweep", false, [](const RunConfig& c) { return fmt_list(c.seeds); },
                 [](RunConfig& c, const std::string& v) { c.seeds = parse_list<std::uint64_t>(v); }});
    r.push_back(int_key("k", "real aerial records per class in the few-shot set", [](RunConfig& c) -> auto& { return c.k; }));
    r.push_back({"ks", "k values of a k-shot sweep", false, [](const RunConfig& c) { return fmt_list(c.ks); },
                 [](RunConfig& c, const std::string& v) { c.ks = parse_list<int>(v); }});
    r.push_back({"mode", "DML mode: baseline, games, generated, games_plus_generated", false,
                 [](const RunConfig& c) { return to_string(c.mode); },
                 [](RunConfig& c, const std::string& v) { c.mode = dml_mode_from_string(trim(v)); }});
    r.push_back({"modes", "modes compared by a k-shot sweep", false, [](const RunConfig& c) { return fmt_list(c.modes); },
                 [](RunConfig& c, const std::string& v) {
                     std::vector<DmlMode> m;
                     for (const auto& s : split_list(v)) m.push_back(dml_mode_from_string(s));
                     if (m.empty()) throw ConfigError("empty list");
                     c.modes = std::move(m);
                 }});
    r.push_back(int_key("per-record", "generated features per ground record",
                        [](RunConfig& c) -> auto& { return c.pipeline.per_record; }));
    r.push_back(bool_key("standardize", "z-score features using ground + few-shot statistics",
                         [](RunConfig& c) -> auto& { return c.pipeline.standardize; }));

    // synthetic benchmark
    auto bench = [](auto member) { return [member](RunConfig& c) -> auto& { return c.pipeline.bench.*member; }; };
    r.push_back(int_key("num-classes", "real action classes", bench(&SynthBenchConfig::num_classes)));
    r.push_back(int_key("dim", "feature dimension", bench(&SynthBenchConfig::dim)));
    r.push_back(int_key("ground-per-class", "ground records per class", bench(&SynthBenchConfig::ground_per_class)));
    r.push_back(int_key("aerial-per-class", "real aerial records per class", bench(&SynthBenchConfig::aerial_per_class)));
    r.push_back(int_key("game-per-class", "game records per game class", bench(&SynthBenchConfig::game_per_class)));
    r.push_back(int_key("game-classes", "game action classes", bench(&SynthBenchConfig::game_classes)));
    r.push_back(int_key("game-overlap", "game classes sharing a real class centre", bench(&SynthBenchConfig::game_overlap)));
    r.push_back(real_key("base-level", "common feature offset", bench(&SynthBenchConfig::base_level)));
    r.push_back(real_key("class-separation", "std of class centres", bench(&SynthBenchConfig::class_separation)));
    r.push_back(real_key("cluster-spread", "within-class isotropic std", bench(&SynthBenchConfig::cluster_spread)));
    r.push_back(int_key("nuisance-rank", "rank of the shared nuisance subspace", bench(&SynthBenchConfig::nuisance_rank)));
    r.push_back(real_key("nuisance-scale", "std of nuisance coordinates", bench(&SynthBenchConfig::nuisance_scale)));
    r.push_back(real_key("map-strength", "strength of the ground-to-aerial linear map", bench(&SynthBenchConfig::map_strength)));
    r.push_back(real_key("aerial-shift", "std of the aerial shift", bench(&SynthBenchConfig::aerial_shift)));
    r.push_back(real_key("aerial-noise", "aerial noise std", bench(&SynthBenchConfig::aerial_noise)));
    r.push_back(real_key("game-offset", "std of the game bias", bench(&SynthBenchConfig::game_offset)));
    r.push_back(u64_key("synth-seed", "benchmark seed used by kshot-sweep", bench(&SynthBenchConfig::seed)));

    // split
    auto sp = [](auto member) { return [member](RunConfig& c) -> auto& { return c.pipeline.split.*member; }; };
    r.push_back(real_key("train-frac", "train share per class", sp(&SplitSpec::train_frac)));
    r.push_back(real_key("val-frac", "validation share per class", sp(&SplitSpec::val_frac)));
    r.push_back(real_key("test-frac", "test share per class", sp(&SplitSpec::test_frac)));
    r.push_back(u64_key("split-seed", "seed of the stratified split", sp(&SplitSpec::seed)));

    // classifier pre-training
    r.push_back(int_key("cls-epochs", "full-batch steps of classifier pre-training",
                        [](RunConfig& c) -> auto& { return c.pipeline.classifier.epochs; }));
    r.push_back(real_key("cls-lr", "classifier learning rate",
                         [](RunConfig& c) -> auto& { return c.pipeline.classifier.adam.learning_rate; }));

    // GAN
    auto gan = [](auto member) { return [member](RunConfig& c) -> auto& { return c.pipeline.gan.*member; }; };
    r.push_back(int_key("noise-dim", "generator noise dimension", gan(&GanConfig::noise_dim)));
    r.push_back(hidden_key("gen-hidden", "generator hidden widths", gan(&GanConfig::generator_hidden)));
    r.push_back(hidden_key("critic-hidden", "critic hidden widths", gan(&GanConfig::critic_hidden)));
    r.push_back(real_key("leaky-slope", "leaky ReLU slope", gan(&GanConfig::leaky_slope)));
    r.push_back(real_key("lambda-gp", "gradient penalty weight", gan(&GanConfig::lambda_gp)));
    r.push_back(real_key("beta-cls", "classification loss weight", gan(&GanConfig::beta_cls)));
    r.push_back(int_key("n-critic", "critic steps per generator step", gan(&GanConfig::n_critic)));
    r.push_back(int_key("gan-batch", "GAN batch size", gan(&GanConfig::batch_size)));
    r.push_back(int_key("gan-epochs", "GAN epochs", gan(&GanConfig::epochs)));
    r.push_back(gan_adam_key("gan-lr", "GAN learning rate", [](AdamHyper& a) -> auto& { return a.learning_rate; }));
    r.push_back(gan_adam_key("gan-beta1", "GAN Adam beta1", [](AdamHyper& a) -> auto& { return a.beta1; }));
    r.push_back(gan_adam_key("gan-beta2", "GAN Adam beta2", [](AdamHyper& a) -> auto& { return a.beta2; }));
    r.push_back(bool_key("eq2-literal", "critic uses -log D(real) for the real term",
                         [](RunConfig& c) -> auto& { return c.pipeline.gan.options.eq2_literal; }));
    r.push_back(bool_key("interpolate-real-aerial", "penalty interpolates towards real aerial features",
                         [](RunConfig& c) -> auto& { return c.pipeline.gan.options.interpolate_real_aerial; }));

    // DML
    auto dml = [](auto member) { return [member](RunConfig& c) -> auto& { return c.pipeline.dml.*member; }; };
    r.push_back(hidden_key("trunk-hidden", "trunk widths", dml(&DmlConfig::trunk_hidden)));
    r.push_back({"trunk-activation", "trunk activation: relu, leaky_relu or linear", false,
                 [](const RunConfig& c) { return to_string(c.pipeline.dml.trunk_activation); },
                 [](RunConfig& c, const std::string& v) { c.pipeline.dml.trunk_activation = activation_from_string(trim(v)); }});
    r.push_back(real_key("dml-lr", "DML learning rate", [](RunConfig& c) -> auto& { return c.pipeline.dml.adam.learning_rate; }));
    r.push_back(real_key("dml-beta1", "DML Adam beta1", [](RunConfig& c) -> auto& { return c.pipeline.dml.adam.beta1; }));
    r.push_back(real_key("dml-beta2", "DML Adam beta2", [](RunConfig& c) -> auto& { return c.pipeline.dml.adam.beta2; }));
    r.push_back(int_key("dml-epochs", "DML epochs", dml(&DmlConfig::epochs)));
    r.push_back(int_key("dml-batch", "DML batch size per source", dml(&DmlConfig::batch_size)));
    for (int h = 0; h < kNumHeads; ++h)
        r.push_back(real_key("w" + std::to_string(h + 1), "weight of branch " + std::to_string(h + 1),
                             [h](RunConfig& c) -> auto& { return c.pipeline.dml.weights.w[static_cast<std::size_t>(h)]; }));
    r.push_back(real_key("gen-branch-weight", "multiplier on w2 and w4 while fine-tuning on generated data",
                         dml(&DmlConfig::generated_branch_weight)));
    r.push_back(bool_key("soft-labels", "teacher distributions instead of hard pseudo-labels", dml(&DmlConfig::soft_labels)));
    r.push_back(bool_key("ensemble-heads", "predict with heads 1 and 2 averaged", dml(&DmlConfig::ensemble_heads)));
    r.push_back(bool_key("finetune-with-games", "keep training on games during the fine-tune",
                         dml(&DmlConfig::finetune_with_games)));

    // every optimizer
    r.push_back(all_adam_key("adam-epsilon", "Adam epsilon", [](AdamHyper& a) -> auto& { return a.epsilon; }));
    r.push_back(all_adam_key("weight-decay", "L2 weight decay", [](AdamHyper& a) -> auto& { return a.weight_decay; }));
    r.push_back(all_adam_key("grad-clip", "gradient norm clip (0 disables)", [](AdamHyper& a) -> auto& { return a.clip_norm; }));
    r.push_back(all_adam_key("lr-decay", "inverse-time learning rate decay", [](AdamHyper& a) -> auto& { return a.lr_decay; }));

    // paths
    r.push_back(path_key("ground", "ground dataset", [](RunConfig& c) -> auto& { return c.ground; }));
    r.push_back(path_key("real", "k-shot real aerial dataset", [](RunConfig& c) -> auto& { return c.real; }));
    r.push_back(path_key("val", "validation dataset", [](RunConfig& c) -> auto& { return c.val; }));
    r.push_back(path_key("test", "test dataset", [](RunConfig& c) -> auto& { return c.test; }));
    r.push_back(path_key("games", "game dataset", [](RunConfig& c) -> auto& { return c.games; }));
    r.push_back(path_key("generated", "generated dataset", [](RunConfig& c) -> auto& { return c.generated; }));
    r.push_back(path_key("checkpoint", "checkpoint to read", [](RunConfig& c) -> auto& { return c.checkpoint; }));
    r.push_back(path_key("warm-start", "games-mode DML checkpoint for the combined mode",
                         [](RunConfig& c) -> auto& { return c.warm_start; }));
    r.push_back(path_key("data-dir", "directory written by synth-data", [](RunConfig& c) -> auto& { return c.data_dir; }));
    r.push_back(path_key("out", "output directory", [](RunConfig& c) -> auto& { return c.out; }));
    return r;
}

} // namespace

const std::vector<ConfigKey>& config_keys()
{
    static const std::vector<ConfigKey> keys = build_registry();
    return keys;
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value)
{
    for (const auto& k : config_keys()) {
        if (k.name != key) continue;
        try {
            k.set(config, value);
        } catch (const Error& e) {
            throw ConfigError("config key '" + key + "': " + e.what());
        }
        return;
    }
    throw ConfigError("unknown config key '" + key + "'");
}

void apply_config_text(RunConfig& config, const std::string& text)
{
    std::stringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + " is not key = value");
        set_config_value(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

void apply_config_file(RunConfig& config, const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    apply_config_text(config, buf.str());
}

std::string format_config(const RunConfig& config)
{
    std::string out;
    for (const auto& k : config_keys()) out += k.name + " = " + k.get(config) + "\n";
    return out;
}

std::string config_hash(const RunConfig& config)
{
    std::string text;
    for (const auto& k : config_keys())
        if (!k.path) text += k.name + "=" + k.get(config) + "\n";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(text)));
    return buf;
}

void validate(const RunConfig& c)
{
    c.pipeline.bench.validate();
    c.pipeline.split.validate();
    c.pipeline.classifier.adam.validate();
    if (c.pipeline.classifier.epochs < 0) throw ConfigError("cls-epochs must be non-negative");
    c.pipeline.gan.validate();
    c.pipeline.dml.validate();
    if (c.pipeline.per_record < 0) throw ConfigError("per-record must be non-negative");
    if (c.k < 1) throw ConfigError("k must be at least 1");
    for (int k : c.ks)
        if (k < 1) throw ConfigError("every k in ks must be at least 1");
}

} // namespace fsdml
