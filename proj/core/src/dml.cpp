#include "fsdml/dml.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "fsdml/errors.hpp"
#include "fsdml/rng.hpp"

namespace fsdml {

std::string to_string(DmlMode mode)
{
    switch (mode) {
    case DmlMode::baseline: return "baseline";
    case DmlMode::games: return "games";
    case DmlMode::generated: return "generated";
    case DmlMode::games_plus_generated: return "games_plus_generated";
    }
    return "baseline";
}

DmlMode dml_mode_from_string(const std::string& name)
{
    if (name == "baseline") return DmlMode::baseline;
    if (name == "games") return DmlMode::games;
    if (name == "generated") return DmlMode::generated;
    if (name == "games_plus_generated") return DmlMode::games_plus_generated;
    throw ConfigError("unknown DML mode '" + name + "'");
}

void BranchWeights::validate() const
{
    for (double v : w)
        if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("branch weights must be finite and non-negative");
    if (!(w[0] > 0.0)) throw ConfigError("branch weight w1 must be positive");
}

void DmlConfig::validate() const
{
    if (trunk_hidden.size() != 2) throw ConfigError("the DML trunk has exactly two layers");
    if (trunk_activation == Activation::softmax) throw ConfigError("trunk activation cannot be softmax");
    adam.validate();
    if (epochs < 0) throw ConfigError("dml epochs must be non-negative");
    if (batch_size < 1) throw ConfigError("dml batch size must be positive");
    weights.validate();
    if (!(generated_branch_weight >= 0.0)) throw ConfigError("generated_branch_weight must be non-negative");
}

DmlAdam DmlAdam::zeros_for(const DmlNet& net)
{
    DmlAdam a;
    a.trunk = AdamState::zeros_for(net.trunk);
    for (int h = 0; h < kNumHeads; ++h) a.heads[static_cast<std::size_t>(h)] = AdamState::zeros_for(net.heads[static_cast<std::size_t>(h)]);
    return a;
}

DmlNet build_dml(int input_dim, int real_classes, int aux_classes, std::uint64_t seed, const DmlConfig& config)
{
    if (real_classes < 2 || aux_classes < 2) throw ConfigError("DML heads need at least two classes each");
    if (input_dim < 1) throw ConfigError("DML input dimension must be positive");
    config.validate();
    const int t1 = config.trunk_hidden[0];
    const int t2 = config.trunk_hidden[1];
    const std::vector<LayerSpec> trunk{{input_dim, t1, config.trunk_activation},
                                       {t1, t2, config.trunk_activation}};
    DmlNet net;
    net.trunk = init_params(trunk, derive_seed(seed, "dml-trunk"));
    const std::array<int, kNumHeads> widths{real_classes, real_classes, aux_classes, aux_classes};
    for (int h = 0; h < kNumHeads; ++h) {
        const std::vector<LayerSpec> head{{t2, widths[static_cast<std::size_t>(h)], Activation::softmax}};
        net.heads[static_cast<std::size_t>(h)] =
            init_params(head, derive_seed(seed, "dml-head", static_cast<std::uint64_t>(h)));
    }
    return net;
}

PseudoLabelBatch pseudo_labels(const DmlNet& net, Head teacher, const Matrix& batch)
{
    if (teacher != Head::real_on_real && teacher != Head::aux_on_aux)
        throw InputError("only heads 1 and 4 are trained on ground truth and can act as teachers");
    PseudoLabelBatch out;
    out.source = teacher;
    if (batch.rows() == 0) {
        out.probabilities = Matrix(0, net.head(teacher).output_dim());
        return out;
    }
    const Matrix features = predict(net.trunk, batch);
    const ForwardCache cache = forward(net.head(teacher), features);
    out.hard_labels = argmax_rows(cache.logits());
    out.probabilities = cache.output();
    return out;
}

namespace {

struct BranchTerm {
    double loss = 0.0;
    ParamBundle head_grad;
    Matrix trunk_grad; // d loss / d trunk output
};

BranchTerm branch_term(const ParamBundle& head, const Matrix& trunk_out, const PseudoLabelBatch* soft,
                       std::span<const int> hard, double weight)
{
    const ForwardCache cache = forward(head, trunk_out);
    LossAndGrad ce = soft ? soft_cross_entropy(cache.output(), soft->probabilities)
                          : softmax_cross_entropy(cache.output(), hard);
    ce.grad *= weight;
    Gradients g = backprop_from_logits(head, cache, ce.grad);
    return BranchTerm{ce.loss, std::move(g.params), std::move(g.input)};
}

} // namespace

DmlLoss dml_loss(const DmlNet& net, const LabeledBatch& real, const LabeledBatch& aux, const BranchWeights& weights,
                 const PseudoLabelBatch& aux_labels_for_real, const PseudoLabelBatch& real_labels_for_aux,
                 bool soft_labels)
{
    DmlLoss out;
    out.grads.trunk = zeros_like(net.trunk);
    for (int h = 0; h < kNumHeads; ++h)
        out.grads.heads[static_cast<std::size_t>(h)] = zeros_like(net.heads[static_cast<std::size_t>(h)]);

    auto run_source = [&](const LabeledBatch& batch, Head truth_head, Head pseudo_head,
                          const PseudoLabelBatch& pseudo) {
        if (batch.features.rows() == 0) return;
        const bool use_truth = weights[truth_head] > 0.0;
        const bool use_pseudo = weights[pseudo_head] > 0.0;
        if (!use_truth && !use_pseudo) return;
        const ForwardCache trunk_cache = forward(net.trunk, batch.features);
        const Matrix& feats = trunk_cache.output();
        Matrix trunk_grad = Matrix::Zero(feats.rows(), feats.cols());
        if (use_truth) {
            auto t = branch_term(net.head(truth_head), feats, nullptr, batch.labels, weights[truth_head]);
            out.branch[static_cast<std::size_t>(index_of(truth_head))] = t.loss;
            out.grads.heads[static_cast<std::size_t>(index_of(truth_head))] = std::move(t.head_grad);
            trunk_grad += t.trunk_grad;
        }
        if (use_pseudo) {
            if (pseudo.hard_labels.size() != static_cast<std::size_t>(batch.features.rows()))
                throw ShapeError("pseudo-label count does not match batch size");
            auto t = branch_term(net.head(pseudo_head), feats, soft_labels ? &pseudo : nullptr, pseudo.hard_labels,
                                 weights[pseudo_head]);
            out.branch[static_cast<std::size_t>(index_of(pseudo_head))] = t.loss;
            out.grads.heads[static_cast<std::size_t>(index_of(pseudo_head))] = std::move(t.head_grad);
            trunk_grad += t.trunk_grad;
        }
        out.grads.trunk += backprop(net.trunk, trunk_cache, trunk_grad).params;
    };

    // Ground-truth branches (1 on real, 4 on aux) are assembled before the
    // pseudo-label branches of the same source.
    run_source(real, Head::real_on_real, Head::aux_on_real, aux_labels_for_real);
    run_source(aux, Head::aux_on_aux, Head::real_on_aux, real_labels_for_aux);

    out.total = weights[Head::real_on_real] * out.branch[0] + weights[Head::aux_on_aux] * out.branch[3] +
                weights[Head::real_on_aux] * out.branch[1] + weights[Head::aux_on_real] * out.branch[2];
    return out;
}

DmlStepReport dml_step(DmlNet& net, DmlAdam& adam, const LabeledBatch& real, const LabeledBatch& aux,
                       const BranchWeights& weights, const DmlConfig& config)
{
    if (real.features.rows() != static_cast<Eigen::Index>(real.labels.size()) ||
        aux.features.rows() != static_cast<Eigen::Index>(aux.labels.size()))
        throw ShapeError("dml_step: label count does not match batch size");
    for (int y : real.labels)
        if (y < 0 || y >= net.real_classes()) throw InputError("real label out of range");
    for (int y : aux.labels)
        if (y < 0 || y >= net.aux_classes()) throw InputError("aux label out of range");

    DmlStepReport report;
    // Teachers are evaluated once, before any parameter moves.
    report.aux_labels_for_real = pseudo_labels(net, Head::aux_on_aux, real.features);
    report.real_labels_for_aux = pseudo_labels(net, Head::real_on_real, aux.features);

    DmlLoss loss = dml_loss(net, real, aux, weights, report.aux_labels_for_real, report.real_labels_for_aux,
                            config.soft_labels);
    if (!std::isfinite(loss.total)) throw TrainingError("multitask loss is not finite");
    report.total = loss.total;
    report.branch = loss.branch;

    adam_step(adam.trunk, net.trunk, loss.grads.trunk, config.adam);
    for (int h = 0; h < kNumHeads; ++h) {
        const auto i = static_cast<std::size_t>(h);
        adam_step(adam.heads[i], net.heads[i], loss.grads.heads[i], config.adam);
    }
    return report;
}

Classification classify(const DmlNet& net, const Matrix& features, bool ensemble)
{
    if (features.cols() != net.input_dim()) throw ShapeError("feature dimension does not match the DML trunk");
    const Matrix t = predict(net.trunk, features);
    Classification out;
    out.probabilities = predict(net.head(Head::real_on_real), t);
    if (ensemble) out.probabilities = 0.5 * (out.probabilities + predict(net.head(Head::real_on_aux), t));
    out.labels = argmax_rows(out.probabilities);
    return out;
}

DmlNet warm_start(const DmlNet& target, const DmlNet& source)
{
    if (target.trunk.specs != source.trunk.specs)
        throw ConfigError("warm start: trunk shapes differ");
    if (target.head(Head::real_on_real).specs != source.head(Head::real_on_real).specs)
        throw ConfigError("warm start: real-label head shapes differ (" + std::to_string(source.real_classes()) +
                          " vs " + std::to_string(target.real_classes()) + " classes)");
    DmlNet out = target;
    out.trunk = source.trunk;
    out.head(Head::real_on_real) = source.head(Head::real_on_real);
    return out;
}

double accuracy(const DmlNet& net, const Dataset& data, bool ensemble)
{
    if (data.empty()) return 0.0;
    const auto pred = classify(net, data.feature_matrix(), ensemble).labels;
    const auto truth = data.class_indices();
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) correct += pred[i] == truth[i] ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(truth.size());
}

namespace {

/// Endless reshuffled pass over [0, n).
class Cycler {
public:
    Cycler(std::size_t n, Rng rng) : order_(n), rng_(std::move(rng))
    {
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        reshuffle();
    }

    std::vector<std::size_t> next(std::size_t count)
    {
        std::vector<std::size_t> out;
        if (order_.empty()) return out;
        out.reserve(count);
        while (out.size() < count) {
            if (pos_ == order_.size()) reshuffle();
            out.push_back(order_[pos_++]);
        }
        return out;
    }

private:
    void reshuffle()
    {
        std::shuffle(order_.begin(), order_.end(), rng_);
        pos_ = 0;
    }

    std::vector<std::size_t> order_;
    Rng rng_;
    std::size_t pos_ = 0;
};

LabeledBatch gather(const Matrix& x, const std::vector<int>& y, const std::vector<std::size_t>& rows)
{
    LabeledBatch b{Matrix(static_cast<Eigen::Index>(rows.size()), x.cols()), {}};
    b.labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        b.features.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
        b.labels.push_back(y[rows[i]]);
    }
    return b;
}

struct Source {
    Matrix x;
    std::vector<int> y;

    explicit Source(const Dataset& d) : x(d.feature_matrix()), y(d.class_indices()) {}
    std::size_t size() const { return y.size(); }
};

void copy_shared(DmlNet& dst, DmlAdam& dst_adam, const DmlNet& src, const DmlAdam& src_adam)
{
    dst.trunk = src.trunk;
    dst.head(Head::real_on_real) = src.head(Head::real_on_real);
    dst_adam.trunk = src_adam.trunk;
    dst_adam.heads[0] = src_adam.heads[0];
}

struct LoopResult {
    DmlNet best;
    DmlAdam best_adam;
    std::vector<DmlEpochLog> log;
    int best_epoch = -1;
    double best_val = 0.0;
    DmlNet last;
};

/// Alternating real / aux training with validation-based selection. When
/// `games` is given (fine-tune with games), each iteration also runs a step on
/// (real, games) through `game_view`, which shares trunk and head 1 with `net`.
LoopResult run_loop(DmlNet net, DmlAdam adam, const Dataset& real, const Dataset* aux, const Dataset& val,
                    const BranchWeights& weights, const DmlConfig& config, std::uint64_t seed,
                    const Dataset* games = nullptr, DmlNet* game_view = nullptr)
{
    const Source r(real);
    const Source a = aux ? Source(*aux) : Source(Dataset({}, real.label_space()));
    std::optional<Source> g;
    if (games) g.emplace(*games);
    DmlAdam game_adam;
    if (game_view) game_adam = DmlAdam::zeros_for(*game_view);

    Cycler real_cycle(r.size(), make_rng(seed, "dml-real-order"));
    Cycler aux_cycle(a.size(), make_rng(seed, "dml-aux-order"));
    std::optional<Cycler> game_cycle;
    if (g) game_cycle.emplace(g->size(), make_rng(seed, "dml-game-order"));

    const std::size_t batch = static_cast<std::size_t>(config.batch_size);
    const std::size_t real_batch = std::min(batch, r.size());
    const std::size_t aux_batch = std::min(batch, a.size());
    const std::size_t longest = std::max(r.size(), a.size());
    const std::size_t iters = (longest + batch - 1) / batch;

    LoopResult out;
    out.best = net;
    out.best_adam = adam;
    const bool have_val = !val.empty();

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        DmlEpochLog entry;
        entry.epoch = epoch;
        try {
            for (std::size_t it = 0; it < iters; ++it) {
                const LabeledBatch rb = gather(r.x, r.y, real_cycle.next(real_batch));
                const LabeledBatch ab = gather(a.x, a.y, aux_cycle.next(aux_batch));
                const auto rep = dml_step(net, adam, rb, ab, weights, config);
                for (int h = 0; h < kNumHeads; ++h) entry.branch[static_cast<std::size_t>(h)] += rep.branch[static_cast<std::size_t>(h)];
                entry.total += rep.total;
                if (g && game_view) {
                    const LabeledBatch gb = gather(g->x, g->y, game_cycle->next(std::min(batch, g->size())));
                    copy_shared(*game_view, game_adam, net, adam);
                    dml_step(*game_view, game_adam, rb, gb, config.weights, config);
                    copy_shared(net, adam, *game_view, game_adam);
                }
            }
        } catch (const TrainingError& e) {
            throw TrainingError("DML training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
        }
        const double denom = iters > 0 ? static_cast<double>(iters) : 1.0;
        for (auto& b : entry.branch) b /= denom;
        entry.total /= denom;
        entry.val_accuracy = have_val ? accuracy(net, val, config.ensemble_heads) : 0.0;
        out.log.push_back(entry);
        if (!have_val || out.best_epoch < 0 || entry.val_accuracy > out.best_val) {
            out.best = net;
            out.best_adam = adam;
            out.best_epoch = epoch;
            out.best_val = entry.val_accuracy;
        }
    }
    if (config.epochs == 0) out.best = net;
    out.last = std::move(net);
    return out;
}

void require_domain(const Dataset& d, Domain domain, const char* what)
{
    if (!d.has_domain(domain))
        throw ConfigError(std::string(what) + " must contain only " + to_string(domain) + " records");
}

} // namespace

DmlTrainResult train_dml(DmlMode mode, const DmlInputs& in, const DmlConfig& config, std::uint64_t seed)
{
    config.validate();
    if (in.real.empty()) throw DatasetError("DML training needs real aerial records");
    require_domain(in.real, Domain::real_aerial, "real training set");
    require_domain(in.val, Domain::real_aerial, "validation set");
    if (!in.val.empty() && in.val.label_space() != in.real.label_space())
        throw ConfigError("validation label space differs from the training label space");
    const int dim = in.real.dim();
    const int real_classes = in.real.num_classes();

    auto check_aux = [&](const std::optional<Dataset>& d, Domain domain, const char* what) -> const Dataset& {
        if (!d) throw ConfigError(std::string("mode ") + to_string(mode) + " requires " + what);
        require_domain(*d, domain, what);
        if (!d->empty() && d->dim() != dim) throw ConfigError(std::string(what) + " dimension differs from real data");
        return *d;
    };

    DmlTrainResult result;
    auto finish = [&](LoopResult&& loop) {
        result.net = std::move(loop.best);
        result.adam = std::move(loop.best_adam);
        result.log = std::move(loop.log);
        result.best_epoch = loop.best_epoch;
        result.best_val_accuracy = loop.best_val;
        result.final_net = std::move(loop.last);
    };

    switch (mode) {
    case DmlMode::baseline: {
        BranchWeights w;
        w.w = {config.weights.w[0], 0.0, 0.0, 0.0};
        DmlNet net = build_dml(dim, real_classes, real_classes, seed, config);
        auto loop = run_loop(net, DmlAdam::zeros_for(net), in.real, nullptr, in.val, w, config, seed);
        finish(std::move(loop));
        break;
    }
    case DmlMode::games:
    case DmlMode::generated: {
        const bool games = mode == DmlMode::games;
        const Dataset& aux = games ? check_aux(in.games, Domain::game_aerial, "a game dataset")
                                   : check_aux(in.generated, Domain::generated_aerial, "a generated dataset");
        if (!games && aux.label_space() != in.real.label_space())
            throw ConfigError("generated data must share the real label space");
        DmlNet net = build_dml(dim, real_classes, aux.num_classes(), seed, config);
        auto loop = run_loop(net, DmlAdam::zeros_for(net), in.real, &aux, in.val, config.weights, config, seed);
        finish(std::move(loop));
        break;
    }
    case DmlMode::games_plus_generated: {
        const Dataset& games = check_aux(in.games, Domain::game_aerial, "a game dataset");
        const Dataset& gen = check_aux(in.generated, Domain::generated_aerial, "a generated dataset");
        if (gen.label_space() != in.real.label_space())
            throw ConfigError("generated data must share the real label space");

        DmlNet source;
        if (in.warm_source) {
            source = *in.warm_source;
        } else {
            DmlInputs stage_a{in.real, in.val, in.games, std::nullopt, std::nullopt};
            auto a = train_dml(DmlMode::games, stage_a, config, derive_seed(seed, "stage-games"));
            source = a.net;
            result.games_stage_log = std::move(a.log);
        }
        result.games_stage = source;

        const std::uint64_t ft_seed = derive_seed(seed, "stage-finetune");
        DmlNet fresh = build_dml(dim, real_classes, real_classes, ft_seed, config);
        DmlNet net = warm_start(fresh, source);
        BranchWeights w = config.weights;
        w.w[1] *= config.generated_branch_weight;
        w.w[3] *= config.generated_branch_weight;

        DmlNet game_view = source;
        const bool with_games = config.finetune_with_games && !games.empty();
        auto loop = run_loop(net, DmlAdam::zeros_for(net), in.real, &gen, in.val, w, config, ft_seed,
                             with_games ? &games : nullptr, with_games ? &game_view : nullptr);
        finish(std::move(loop));
        break;
    }
    }
    return result;
}

std::string format_dml_log(const std::vector<DmlEpochLog>& log)
{
    std::string out = "epoch,loss_real_on_real,loss_real_on_aux,loss_aux_on_real,loss_aux_on_aux,total,val_accuracy\n";
    char buf[320];
    for (const auto& e : log) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", e.epoch, e.branch[0], e.branch[1],
                      e.branch[2], e.branch[3], e.total, e.val_accuracy);
        out += buf;
    }
    return out;
}

} // namespace fsdml
