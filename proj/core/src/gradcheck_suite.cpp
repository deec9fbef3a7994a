#include "fsdml/gradcheck_suite.hpp"

#include <cstdio>
#include <random>

#include "fsdml/dml.hpp"
#include "fsdml/gan.hpp"
#include "fsdml/nn.hpp"
#include "fsdml/optim.hpp"
#include "fsdml/rng.hpp"

namespace fsdml {

namespace {

constexpr int kBatch = 8;
constexpr int kFeature = 6;
constexpr int kCondition = kFeature; // interpolation towards ground needs equal widths
constexpr int kNoise = 4;
const std::vector<int> kHidden{12, 10, 8};

Matrix normal(Rng& rng, int rows, int cols, double mean = 0.0)
{
    std::normal_distribution<double> nd(mean, 1.0);
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = nd(rng);
    return m;
}

std::vector<int> labels(Rng& rng, int n, int classes)
{
    std::uniform_int_distribution<int> u(0, classes - 1);
    std::vector<int> y(static_cast<std::size_t>(n));
    for (auto& v : y) v = u(rng);
    return y;
}

std::size_t count(std::span<const ParamBundle> ps)
{
    std::size_t n = 0;
    for (const auto& p : ps) n += p.parameter_count();
    return n;
}

GradcheckCase make_case(std::string name, double err, std::size_t parameters)
{
    GradcheckCase c;
    c.name = std::move(name);
    c.max_rel_error = err;
    c.parameters = parameters;
    return c;
}

// Tiny GAN fixture shared by the critic and generator cases.
struct GanFixture {
    ParamBundle generator, critic, classifier;
    Matrix ground, aerial, noise;
    Vector t;
    std::vector<int> y;
};

GanFixture gan_fixture(std::uint64_t seed)
{
    GanFixture f;
    GeneratorSpec gs{kNoise, kCondition, kFeature, kHidden, kDefaultLeakySlope};
    CriticSpec cs{kFeature, kCondition, kHidden, kDefaultLeakySlope};
    f.generator = init_params(gs.layers(), derive_seed(seed, "g"));
    f.critic = init_params(cs.layers(), derive_seed(seed, "d"));
    const std::vector<LayerSpec> cls{{kFeature, 4, Activation::softmax, kDefaultLeakySlope}};
    f.classifier = init_params(cls, derive_seed(seed, "c"));
    Rng rng = make_rng(seed, "data");
    f.ground = normal(rng, kBatch, kCondition, 1.0);
    f.aerial = normal(rng, kBatch, kFeature, 1.0);
    f.noise = normal(rng, kBatch, kNoise);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    f.t.resize(kBatch);
    for (int i = 0; i < kBatch; ++i) f.t[i] = u(rng);
    f.y = labels(rng, kBatch, 4);
    return f;
}

GradcheckCase cross_entropy_case(std::uint64_t seed)
{
    const std::vector<LayerSpec> specs{{kFeature, 12, Activation::leaky_relu, kDefaultLeakySlope},
                                       {12, 5, Activation::softmax, kDefaultLeakySlope}};
    const ParamBundle net = init_params(specs, derive_seed(seed, "net"));
    Rng rng = make_rng(seed, "data");
    const Matrix x = normal(rng, kBatch, kFeature);
    const auto y = labels(rng, kBatch, 5);
    const auto cache = forward(net, x);
    const auto ce = softmax_cross_entropy(cache.output(), y);
    const ParamBundle grad = backprop_from_logits(net, cache, ce.grad).params;
    const double err = finite_diff_gradcheck(
        [&](const ParamBundle& p) { return softmax_cross_entropy(predict(p, x), y).loss; }, net, grad);
    return make_case("cross_entropy", err, net.parameter_count());
}

GradcheckCase critic_case(std::uint64_t seed, bool literal)
{
    GanFixture f = gan_fixture(seed);
    CriticLossOptions opt;
    opt.eq2_literal = literal;
    opt.interpolate_real_aerial = literal; // cover both anchors
    if (literal) {
        // Keep D(real) away from the floor so the log term is smooth.
        f.critic.biases.back()[0] += 3.0;
    }
    const auto res = critic_loss(f.generator, f.critic, f.ground, f.aerial, f.noise, f.t, 10.0, opt);
    const double err = finite_diff_gradcheck(
        [&](const ParamBundle& d) {
            return critic_loss(f.generator, d, f.ground, f.aerial, f.noise, f.t, 10.0, opt).loss;
        },
        f.critic, res.critic_grads);
    return make_case(literal ? "critic_loss_literal_log" : "critic_loss_with_penalty", err, f.critic.parameter_count());
}

GradcheckCase penalty_case(std::uint64_t seed)
{
    const GanFixture f = gan_fixture(seed);
    Rng rng = make_rng(seed, "points");
    const Matrix inputs = normal(rng, kBatch, kFeature + kCondition);
    const auto gp = gp_param_gradient(f.critic, inputs, 1.0, kFeature);
    const double err = finite_diff_gradcheck(
        [&](const ParamBundle& d) { return gp_param_gradient(d, inputs, 1.0, kFeature).penalty; }, f.critic,
        gp.grads);
    return make_case("gradient_penalty", err, f.critic.parameter_count());
}

GradcheckCase generator_case(std::uint64_t seed)
{
    const GanFixture f = gan_fixture(seed);
    const auto d_before = checksum(f.critic);
    const auto c_before = checksum(f.classifier);
    const auto res = generator_loss(f.generator, f.critic, f.classifier, f.ground, f.y, f.noise, 0.5);
    const double err = finite_diff_gradcheck(
        [&](const ParamBundle& g) {
            return generator_loss(g, f.critic, f.classifier, f.ground, f.y, f.noise, 0.5).loss;
        },
        f.generator, res.generator_grads);
    GradcheckCase c = make_case("generator_loss", err, f.generator.parameter_count());
    c.side_conditions = checksum(f.critic) == d_before && checksum(f.classifier) == c_before;
    c.note = c.side_conditions ? "critic and classifier untouched" : "critic or classifier changed";
    return c;
}

GradcheckCase dml_case(std::uint64_t seed, bool soft)
{
    DmlConfig cfg;
    cfg.trunk_hidden = {16, 12};
    cfg.weights.w = {1.0, 0.7, 0.5, 0.9};
    const DmlNet net = build_dml(kFeature, 3, 4, derive_seed(seed, "net"), cfg);
    Rng rng = make_rng(seed, "data");
    const LabeledBatch real{normal(rng, kBatch, kFeature), labels(rng, kBatch, 3)};
    const LabeledBatch aux{normal(rng, kBatch - 2, kFeature), labels(rng, kBatch - 2, 4)};
    // Pseudo-labels are taken once and held fixed, as in a training step.
    const auto for_real = pseudo_labels(net, Head::aux_on_aux, real.features);
    const auto for_aux = pseudo_labels(net, Head::real_on_real, aux.features);
    const auto loss = dml_loss(net, real, aux, cfg.weights, for_real, for_aux, soft);

    std::vector<ParamBundle> params{net.trunk, net.heads[0], net.heads[1], net.heads[2], net.heads[3]};
    std::vector<ParamBundle> grads{loss.grads.trunk, loss.grads.heads[0], loss.grads.heads[1], loss.grads.heads[2],
                                   loss.grads.heads[3]};
    const double err = finite_diff_gradcheck(
        [&](std::span<const ParamBundle> p) {
            DmlNet n;
            n.trunk = p[0];
            for (int h = 0; h < kNumHeads; ++h) n.heads[static_cast<std::size_t>(h)] = p[static_cast<std::size_t>(h) + 1];
            return dml_loss(n, real, aux, cfg.weights, for_real, for_aux, soft).total;
        },
        params, grads);
    return make_case(soft ? "dml_composite_soft" : "dml_composite", err, count(params));
}

} // namespace

std::vector<GradcheckCase> run_gradcheck_suite(std::uint64_t seed)
{
    return {cross_entropy_case(derive_seed(seed, "ce")),
            critic_case(derive_seed(seed, "critic"), false),
            critic_case(derive_seed(seed, "critic-literal"), true),
            penalty_case(derive_seed(seed, "gp")),
            generator_case(derive_seed(seed, "generator")),
            dml_case(derive_seed(seed, "dml"), false),
            dml_case(derive_seed(seed, "dml-soft"), true)};
}

std::string format_gradcheck_table(const std::vector<GradcheckCase>& cases)
{
    std::string out = "case,parameters,max_rel_error,tolerance,result\n";
    char buf[256];
    for (const auto& c : cases) {
        std::snprintf(buf, sizeof buf, "%s,%zu,%.3e,%.0e,%s\n", c.name.c_str(), c.parameters, c.max_rel_error,
                      kGradcheckTolerance, c.passed() ? "pass" : "FAIL");
        out += buf;
    }
    return out;
}

} // namespace fsdml
