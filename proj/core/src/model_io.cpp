#include "fsdml/model_io.hpp"

#include "fsdml/errors.hpp"

namespace fsdml {

namespace {

std::string join_labels(const std::vector<std::string>& labels)
{
    std::string out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i].find(',') != std::string::npos)
            throw InputError("label '" + labels[i] + "' contains a comma and cannot be stored in a checkpoint");
        if (i > 0) out += ',';
        out += labels[i];
    }
    return out;
}

std::vector<std::string> split_labels(const std::string& joined)
{
    std::vector<std::string> out;
    if (joined.empty()) return out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = joined.find(',', start);
        out.push_back(joined.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

const std::string& meta(const Checkpoint& c, const std::string& key)
{
    const auto it = c.metadata.find(key);
    if (it == c.metadata.end()) throw ParseError("checkpoint metadata lacks '" + key + "'");
    return it->second;
}

Checkpoint stamped(const CheckpointStamp& stamp, std::string kind)
{
    Checkpoint c;
    c.created = stamp.created;
    c.seed = stamp.seed;
    c.config_hash = stamp.config_hash;
    c.kind = std::move(kind);
    return c;
}

std::string head_name(int h) { return "head" + std::to_string(h + 1); }

} // namespace

Checkpoint dml_checkpoint(const DmlNet& net, const DmlAdam* adam, const std::vector<std::string>& real_labels,
                          const std::vector<std::string>& aux_labels, DmlMode mode, const CheckpointStamp& stamp)
{
    if (static_cast<int>(real_labels.size()) != net.real_classes())
        throw ShapeError("real label count does not match head 1");
    if (static_cast<int>(aux_labels.size()) != net.aux_classes())
        throw ShapeError("auxiliary label count does not match head 4");
    Checkpoint c = stamped(stamp, "dml");
    c.metadata["mode"] = to_string(mode);
    c.metadata["real_labels"] = join_labels(real_labels);
    c.metadata["aux_labels"] = join_labels(aux_labels);
    c.nets.push_back({"trunk", net.trunk, adam ? std::optional(adam->trunk) : std::nullopt});
    for (int h = 0; h < kNumHeads; ++h) {
        const auto i = static_cast<std::size_t>(h);
        c.nets.push_back({head_name(h), net.heads[i], adam ? std::optional(adam->heads[i]) : std::nullopt});
    }
    return c;
}

LoadedDml dml_from_checkpoint(const Checkpoint& ckpt)
{
    if (ckpt.kind != "dml") throw ParseError("expected a dml checkpoint, got kind '" + ckpt.kind + "'");
    LoadedDml out;
    try {
        out.mode = dml_mode_from_string(meta(ckpt, "mode"));
    } catch (const ConfigError& e) {
        throw ParseError(e.what());
    }
    out.real_labels = split_labels(meta(ckpt, "real_labels"));
    out.aux_labels = split_labels(meta(ckpt, "aux_labels"));

    const auto& trunk = ckpt.net("trunk");
    out.net.trunk = trunk.params;
    bool all_adam = trunk.adam.has_value();
    for (int h = 0; h < kNumHeads; ++h) {
        const auto& n = ckpt.net(head_name(h));
        out.net.heads[static_cast<std::size_t>(h)] = n.params;
        all_adam = all_adam && n.adam.has_value();
        if (n.params.input_dim() != out.net.trunk.output_dim())
            throw ParseError(head_name(h) + " does not fit the trunk output");
    }
    if (out.net.real_classes() != static_cast<int>(out.real_labels.size()) ||
        out.net.head(Head::real_on_aux).output_dim() != out.net.real_classes())
        throw ParseError("real heads disagree with the stored real label space");
    if (out.net.aux_classes() != static_cast<int>(out.aux_labels.size()) ||
        out.net.head(Head::aux_on_real).output_dim() != out.net.aux_classes())
        throw ParseError("auxiliary heads disagree with the stored auxiliary label space");
    if (all_adam) {
        DmlAdam a;
        a.trunk = *trunk.adam;
        for (int h = 0; h < kNumHeads; ++h) a.heads[static_cast<std::size_t>(h)] = *ckpt.net(head_name(h)).adam;
        out.adam = std::move(a);
    }
    return out;
}

Checkpoint gan_checkpoint(const GanModel& model, const ParamBundle& classifier, const std::vector<std::string>& labels,
                          const CheckpointStamp& stamp)
{
    if (static_cast<int>(labels.size()) != classifier.output_dim())
        throw ShapeError("label count does not match the classifier output");
    Checkpoint c = stamped(stamp, "gan");
    c.metadata["noise_dim"] = std::to_string(model.generator_spec.noise_dim);
    c.metadata["labels"] = join_labels(labels);
    c.nets.push_back({"generator", model.generator, model.generator_adam});
    c.nets.push_back({"critic", model.critic, model.critic_adam});
    c.nets.push_back({"classifier", classifier, std::nullopt});
    return c;
}

LoadedGan gan_from_checkpoint(const Checkpoint& ckpt)
{
    if (ckpt.kind != "gan") throw ParseError("expected a gan checkpoint, got kind '" + ckpt.kind + "'");
    LoadedGan out;
    const auto& g = ckpt.net("generator");
    const auto& d = ckpt.net("critic");
    out.model.generator = g.params;
    out.model.critic = d.params;
    if (g.adam) out.model.generator_adam = *g.adam;
    if (d.adam) out.model.critic_adam = *d.adam;
    out.classifier = ckpt.net("classifier").params;
    out.labels = split_labels(meta(ckpt, "labels"));

    auto& spec = out.model.generator_spec;
    try {
        spec.noise_dim = std::stoi(meta(ckpt, "noise_dim"));
    } catch (const std::logic_error&) {
        throw ParseError("noise_dim metadata is not an integer");
    }
    const auto& layers = out.model.generator.specs;
    spec.condition_dim = out.model.generator.input_dim() - spec.noise_dim;
    spec.output_dim = out.model.generator.output_dim();
    spec.hidden.clear();
    for (std::size_t i = 0; i + 1 < layers.size(); ++i) spec.hidden.push_back(layers[i].output_dim);
    if (!layers.empty()) spec.leaky_slope = layers.front().slope;
    if (spec.noise_dim <= 0 || spec.condition_dim <= 0) throw ParseError("generator input does not fit noise_dim");
    if (out.model.critic.input_dim() != spec.output_dim + spec.condition_dim)
        throw ParseError("critic input does not match generator output plus condition");
    if (out.classifier.input_dim() != spec.output_dim ||
        out.classifier.output_dim() != static_cast<int>(out.labels.size()))
        throw ParseError("classifier does not fit the generator output or label space");
    return out;
}

} // namespace fsdml
