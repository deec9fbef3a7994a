#include <doctest.h>

#include <cmath>

#include "fsdml/dml.hpp"
#include "fsdml/errors.hpp"
#include "helpers.hpp"

using namespace fsdml;
using testutil::gaussian;

namespace {

DmlConfig tiny(int epochs = 5)
{
    DmlConfig c;
    c.trunk_hidden = {16, 12};
    c.epochs = epochs;
    c.batch_size = 8;
    return c;
}

std::vector<int> labels_mod(int n, int classes)
{
    std::vector<int> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = i % classes;
    return y;
}

Dataset with_domain(const Dataset& d, Domain dom)
{
    auto recs = d.records();
    for (auto& r : recs) r.domain = dom;
    return Dataset(recs, d.label_space());
}

struct Toy {
    Dataset real, val, games, generated;
};

Toy toy()
{
    Toy t;
    t.real = testutil::clusters(3, 4, 6, Domain::real_aerial, 1);
    t.val = testutil::clusters(3, 3, 6, Domain::real_aerial, 2);
    t.games = testutil::clusters(4, 6, 6, Domain::game_aerial, 3, 3.0, 0.3, 1.0, "g");
    t.generated = with_domain(testutil::clusters(3, 6, 6, Domain::real_aerial, 4, 3.0, 0.5), Domain::generated_aerial);
    return t;
}

} // namespace

TEST_SUITE("dml") {

TEST_CASE("build_dml head widths and determinism")
{
    const DmlNet n = build_dml(64, 8, 7, 1);
    CHECK(n.trunk.specs[0].output_dim == 512);
    CHECK(n.trunk.specs[1].output_dim == 256);
    CHECK(n.trunk.specs[0].activation == Activation::relu);
    CHECK(n.head(Head::real_on_real).output_dim() == 8);
    CHECK(n.head(Head::real_on_aux).output_dim() == 8);
    CHECK(n.head(Head::aux_on_real).output_dim() == 7);
    CHECK(n.head(Head::aux_on_aux).output_dim() == 7);
    for (const auto& h : n.heads) {
        CHECK(h.input_dim() == 256);
        CHECK(h.specs.back().activation == Activation::softmax);
    }
    const DmlNet two = build_dml(4, 2, 2, 1, tiny());
    for (const auto& h : two.heads) CHECK(h.output_dim() == 2);
    CHECK(build_dml(64, 8, 7, 1) == n);
    CHECK_FALSE(build_dml(64, 8, 7, 2) == n);
    CHECK_THROWS_AS(build_dml(4, 1, 3, 1, tiny()), ConfigError);
    CHECK_THROWS_AS(build_dml(4, 3, 1, 1, tiny()), ConfigError);
}

TEST_CASE("trunk and head 1 do not depend on the auxiliary class count")
{
    const DmlNet a = build_dml(6, 3, 4, 9, tiny()), b = build_dml(6, 3, 7, 9, tiny());
    CHECK(a.trunk == b.trunk);
    CHECK(a.head(Head::real_on_real) == b.head(Head::real_on_real));
}

TEST_CASE("pseudo_labels: argmax, invariances, ties, teacher restriction")
{
    DmlNet net = build_dml(3, 3, 3, 5, tiny());
    // Identity-ish trunk output is hard to arrange; instead drive head 1 through its bias.
    net.head(Head::real_on_real).weights[0].setZero();
    net.head(Head::real_on_real).biases[0] << 2.0, 0.5, 0.1;
    const Matrix x = gaussian(6, 4, 3);
    const auto p = pseudo_labels(net, Head::real_on_real, x);
    CHECK(p.hard_labels == std::vector<int>{0, 0, 0, 0});
    CHECK(p.source == Head::real_on_real);

    net.head(Head::real_on_real).biases[0] *= 7.5;
    CHECK(pseudo_labels(net, Head::real_on_real, x).hard_labels == p.hard_labels);
    net.head(Head::real_on_real).biases[0].array() += 11.0;
    CHECK(pseudo_labels(net, Head::real_on_real, x).hard_labels == p.hard_labels);

    net.head(Head::aux_on_aux).weights[0].setZero();
    net.head(Head::aux_on_aux).biases[0] << 0.3, 1.0, 1.0;
    CHECK(pseudo_labels(net, Head::aux_on_aux, x).hard_labels == std::vector<int>{1, 1, 1, 1});

    CHECK_THROWS_AS(pseudo_labels(net, Head::real_on_aux, x), InputError);
    CHECK_THROWS_AS(pseudo_labels(net, Head::aux_on_real, x), InputError);
}

TEST_CASE("pseudo-labels on random heads are invariant to positive logit scaling")
{
    DmlNet net = build_dml(5, 4, 4, 7, tiny());
    const Matrix x = gaussian(8, 20, 5, 1.0);
    const auto base = pseudo_labels(net, Head::aux_on_aux, x).hard_labels;
    net.head(Head::aux_on_aux).weights[0] *= 3.0;
    net.head(Head::aux_on_aux).biases[0] *= 3.0;
    CHECK(pseudo_labels(net, Head::aux_on_aux, x).hard_labels == base);
}

TEST_CASE("dml_loss with weights (1,0,0,0) and an empty aux batch is plain cross-entropy")
{
    const DmlNet net = build_dml(5, 3, 4, 10, tiny());
    const LabeledBatch real{gaussian(11, 6, 5), labels_mod(6, 3)};
    const LabeledBatch aux{Matrix(0, 5), {}};
    BranchWeights w;
    w.w = {1.0, 0.0, 0.0, 0.0};
    const auto p4 = pseudo_labels(net, Head::aux_on_aux, real.features);
    const auto p1 = pseudo_labels(net, Head::real_on_real, aux.features);
    const DmlLoss l = dml_loss(net, real, aux, w, p4, p1);
    const Matrix probs = predict(net.head(Head::real_on_real), predict(net.trunk, real.features));
    CHECK(l.total == doctest::Approx(softmax_cross_entropy(probs, real.labels).loss).epsilon(1e-14));
    for (int h = 1; h < kNumHeads; ++h) {
        const auto& g = l.grads.heads[static_cast<std::size_t>(h)];
        for (std::size_t i = 0; i < g.parameter_count(); ++i) CHECK(g.at(i) == 0.0);
    }
}

TEST_CASE("dml_loss gradient matches the oracle with pseudo-labels fixed")
{
    for (bool soft : {false, true}) {
        const DmlNet net = build_dml(5, 3, 4, 12, tiny());
        const LabeledBatch real{gaussian(13, 6, 5), labels_mod(6, 3)};
        const LabeledBatch aux{gaussian(14, 7, 5), labels_mod(7, 4)};
        BranchWeights w;
        w.w = {1.0, 0.7, 0.5, 0.9};
        const auto p4 = pseudo_labels(net, Head::aux_on_aux, real.features);
        const auto p1 = pseudo_labels(net, Head::real_on_real, aux.features);
        const DmlLoss l = dml_loss(net, real, aux, w, p4, p1, soft);
        // flatten trunk + heads into one list for the multi-bundle checker
        std::vector<ParamBundle> params{net.trunk};
        std::vector<ParamBundle> analytic{l.grads.trunk};
        for (int h = 0; h < kNumHeads; ++h) {
            params.push_back(net.heads[static_cast<std::size_t>(h)]);
            analytic.push_back(l.grads.heads[static_cast<std::size_t>(h)]);
        }
        auto loss = [&](std::span<const ParamBundle> p) {
            DmlNet n;
            n.trunk = p[0];
            for (int h = 0; h < kNumHeads; ++h) n.heads[static_cast<std::size_t>(h)] = p[static_cast<std::size_t>(h) + 1];
            return dml_loss(n, real, aux, w, p4, p1, soft).total;
        };
        CHECK(finite_diff_gradcheck(loss, params, analytic) < 1e-4);
        CHECK(l.total == doctest::Approx(w.w[0] * l.branch[0] + w.w[1] * l.branch[1] + w.w[2] * l.branch[2] +
                                         w.w[3] * l.branch[3]));
    }
}

TEST_CASE("dml_step: labels are captured before the update, shapes never change")
{
    DmlNet net = build_dml(5, 3, 4, 15, tiny());
    const DmlNet before = net;
    DmlAdam adam = DmlAdam::zeros_for(net);
    const LabeledBatch real{gaussian(16, 6, 5), labels_mod(6, 3)};
    const LabeledBatch aux{gaussian(17, 7, 5), labels_mod(7, 4)};
    DmlConfig cfg = tiny();
    cfg.adam.learning_rate = 0.5; // large step so the teachers change
    const auto rep = dml_step(net, adam, real, aux, BranchWeights{}, cfg);
    CHECK(rep.aux_labels_for_real.hard_labels == pseudo_labels(before, Head::aux_on_aux, real.features).hard_labels);
    CHECK(rep.real_labels_for_aux.hard_labels == pseudo_labels(before, Head::real_on_real, aux.features).hard_labels);
    CHECK(std::isfinite(rep.total));
    CHECK(adam.trunk.step_count == 1);
    CHECK(net.trunk.specs == before.trunk.specs);
    for (int h = 0; h < kNumHeads; ++h) {
        CHECK(net.heads[static_cast<std::size_t>(h)].specs == before.heads[static_cast<std::size_t>(h)].specs);
        CHECK_FALSE(net.heads[static_cast<std::size_t>(h)] == before.heads[static_cast<std::size_t>(h)]);
    }
    CHECK_THROWS_AS(dml_step(net, adam, LabeledBatch{gaussian(1, 3, 5), {0, 1}}, aux, BranchWeights{}, cfg),
                    ShapeError);
    CHECK_THROWS_AS(dml_step(net, adam, LabeledBatch{gaussian(1, 2, 5), {0, 5}}, aux, BranchWeights{}, cfg),
                    InputError);
}

TEST_CASE("dml_step at zero loss leaves parameters put")
{
    // All heads certain of the labels they are trained towards: every branch has zero loss and zero gradient.
    DmlNet net = build_dml(3, 2, 2, 18, tiny());
    for (auto& h : net.heads) {
        h.weights[0].setZero();
        h.biases[0] << 1000.0, 0.0;
    }
    const DmlNet before = net;
    DmlAdam adam = DmlAdam::zeros_for(net);
    const LabeledBatch real{gaussian(19, 4, 3), {0, 0, 0, 0}};
    const LabeledBatch aux{gaussian(20, 4, 3), {0, 0, 0, 0}};
    const auto rep = dml_step(net, adam, real, aux, BranchWeights{}, tiny());
    CHECK(rep.total == 0.0);
    CHECK(net == before);
    CHECK(adam.trunk.step_count == 1);
}

TEST_CASE("classify uses head 1 and keeps order")
{
    DmlNet net = build_dml(4, 5, 3, 21, tiny());
    net.head(Head::real_on_real).weights[0].setZero();
    net.head(Head::real_on_real).biases[0] << 0, 0, 0, 9, 0;
    const Matrix x = gaussian(22, 7, 4);
    const auto c = classify(net, x);
    CHECK(c.labels == std::vector<int>(7, 3));
    CHECK(c.probabilities.rows() == 7);
    for (Eigen::Index r = 0; r < 7; ++r) CHECK(c.probabilities.row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));

    const DmlNet rnd = build_dml(4, 5, 3, 23, tiny());
    const auto all = classify(rnd, x).labels;
    for (Eigen::Index r = 0; r < 7; ++r) CHECK(classify(rnd, x.row(r)).labels[0] == all[static_cast<std::size_t>(r)]);
    CHECK_THROWS_AS(classify(rnd, gaussian(1, 2, 5)), ShapeError);
}

TEST_CASE("warm_start copies trunk and head 1 bitwise, keeps the rest fresh")
{
    const DmlNet source = build_dml(6, 3, 4, 30, tiny());
    const DmlNet target = build_dml(6, 3, 3, 31, tiny());
    const DmlNet w = warm_start(target, source);
    CHECK(w.trunk == source.trunk);
    CHECK(w.head(Head::real_on_real) == source.head(Head::real_on_real));
    for (Head h : {Head::real_on_aux, Head::aux_on_real, Head::aux_on_aux}) {
        CHECK(w.head(h) == target.head(h));
        CHECK_FALSE(w.head(h) == source.head(h));
    }
    CHECK_THROWS_AS(warm_start(build_dml(6, 4, 3, 31, tiny()), source), ConfigError);
    DmlConfig wide = tiny();
    wide.trunk_hidden = {20, 12};
    CHECK_THROWS_AS(warm_start(build_dml(6, 3, 3, 31, wide), source), ConfigError);
}

TEST_CASE("train_dml: baseline determinism and validation selection")
{
    const Toy t = toy();
    const DmlInputs in{t.real, t.val, std::nullopt, std::nullopt, std::nullopt};
    const auto a = train_dml(DmlMode::baseline, in, tiny(8), 40);
    const auto b = train_dml(DmlMode::baseline, in, tiny(8), 40);
    CHECK(a.log == b.log);
    CHECK(a.net == b.net);
    CHECK(a.log.size() == 8);
    CHECK(a.best_epoch >= 0);
    CHECK(a.best_val_accuracy == a.log[static_cast<std::size_t>(a.best_epoch)].val_accuracy);
    CHECK(accuracy(a.net, t.val) == doctest::Approx(a.best_val_accuracy));
    CHECK(accuracy(a.net, t.val) >= accuracy(a.final_net, t.val));
    for (const auto& e : a.log) CHECK(a.best_val_accuracy >= e.val_accuracy);
    const std::string csv = format_dml_log(a.log);
    CHECK(csv.rfind("epoch,loss_real_on_real,loss_real_on_aux,loss_aux_on_real,loss_aux_on_aux,total,val_accuracy\n", 0) == 0);
}

TEST_CASE("games mode with w2 = w3 = 0 and no aux data reproduces baseline exactly")
{
    const Toy t = toy();
    DmlConfig cfg = tiny(6);
    cfg.weights.w = {1.0, 0.0, 0.0, 1.0};
    const DmlInputs base{t.real, t.val, std::nullopt, std::nullopt, std::nullopt};
    const DmlInputs games{t.real, t.val, Dataset({}, t.real.label_space()), std::nullopt, std::nullopt};
    const auto a = train_dml(DmlMode::baseline, base, cfg, 41);
    const auto b = train_dml(DmlMode::games, games, cfg, 41);
    CHECK(a.net == b.net);
    CHECK(a.log == b.log);
}

TEST_CASE("train_dml: every mode runs; combined records its games stage")
{
    const Toy t = toy();
    const DmlInputs in{t.real, t.val, t.games, t.generated, std::nullopt};
    for (DmlMode m : {DmlMode::games, DmlMode::generated, DmlMode::games_plus_generated}) {
        const auto r = train_dml(m, in, tiny(3), 42);
        CHECK(r.log.size() == 3);
        CHECK(r.net.real_classes() == 3);
        CHECK(r.net.trunk.all_finite());
    }
    const auto g = train_dml(DmlMode::games, in, tiny(3), 42);
    CHECK(g.net.aux_classes() == 4);
    const auto c = train_dml(DmlMode::games_plus_generated, in, tiny(3), 42);
    REQUIRE(c.games_stage.has_value());
    CHECK(c.games_stage_log.size() == 3);
    CHECK(c.net.aux_classes() == 3);

    // a supplied source is used as-is
    DmlInputs warm = in;
    warm.warm_source = g.net;
    const auto w = train_dml(DmlMode::games_plus_generated, warm, tiny(0), 42);
    CHECK(w.games_stage == g.net);
    CHECK(w.net.trunk == g.net.trunk);
    CHECK(w.games_stage_log.empty());
}

TEST_CASE("train_dml: mode and dataset mismatches are configuration errors")
{
    const Toy t = toy();
    const DmlInputs none{t.real, t.val, std::nullopt, std::nullopt, std::nullopt};
    CHECK_THROWS_AS(train_dml(DmlMode::games, none, tiny(1), 1), ConfigError);
    CHECK_THROWS_AS(train_dml(DmlMode::generated, none, tiny(1), 1), ConfigError);
    const DmlInputs only_games{t.real, t.val, t.games, std::nullopt, std::nullopt};
    CHECK_THROWS_AS(train_dml(DmlMode::games_plus_generated, only_games, tiny(1), 1), ConfigError);
    const DmlInputs swapped{t.real, t.val, t.generated, std::nullopt, std::nullopt};
    CHECK_THROWS_AS(train_dml(DmlMode::games, swapped, tiny(1), 1), ConfigError);
    const DmlInputs wrong_real{with_domain(t.real, Domain::real_ground), t.val, std::nullopt, std::nullopt,
                               std::nullopt};
    CHECK_THROWS_AS(train_dml(DmlMode::baseline, wrong_real, tiny(1), 1), ConfigError);
}

TEST_CASE("mode names and config validation")
{
    for (DmlMode m : {DmlMode::baseline, DmlMode::games, DmlMode::generated, DmlMode::games_plus_generated})
        CHECK(dml_mode_from_string(to_string(m)) == m);
    CHECK_THROWS_AS(dml_mode_from_string("both"), ConfigError);
    BranchWeights w;
    w.w = {0.0, 1.0, 1.0, 1.0};
    CHECK_THROWS_AS(w.validate(), ConfigError);
    w.w = {1.0, -1.0, 1.0, 1.0};
    CHECK_THROWS_AS(w.validate(), ConfigError);
    DmlConfig c;
    CHECK(c.epochs == 200);
    CHECK(c.batch_size == 32);
    CHECK(c.generated_branch_weight == 0.5);
    c.trunk_hidden = {512};
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

}
