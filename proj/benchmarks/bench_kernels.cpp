// Hot kernels at the default synthetic-benchmark sizes (dim 64, batch 64).

#include <benchmark/benchmark.h>

#include <random>

#include "fsdml/dml.hpp"
#include "fsdml/gan.hpp"
#include "fsdml/rng.hpp"

using namespace fsdml;

namespace {

constexpr int kDim = 64;
constexpr int kBatch = 64;

Matrix noise(std::uint64_t seed, int rows, int cols)
{
    Rng rng(seed);
    std::normal_distribution<double> nd(0, 1);
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = nd(rng);
    return m;
}

std::vector<int> labels(int n, int classes)
{
    std::vector<int> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = i % classes;
    return y;
}

GanModel gan_model()
{
    GeneratorSpec g;
    g.condition_dim = kDim;
    g.output_dim = kDim;
    CriticSpec c;
    c.feature_dim = kDim;
    c.condition_dim = kDim;
    GanModel m;
    m.generator_spec = g;
    m.generator = init_params(g.layers(), 1);
    m.critic = init_params(c.layers(), 2);
    return m;
}

void BM_forward_backprop(benchmark::State& state)
{
    CriticSpec c;
    c.feature_dim = kDim;
    c.condition_dim = kDim;
    const ParamBundle net = init_params(c.layers(), 3);
    const Matrix x = noise(4, kBatch, 2 * kDim);
    const Matrix g = Matrix::Constant(kBatch, 1, 1.0 / kBatch);
    for (auto _ : state) {
        const ForwardCache cache = forward(net, x);
        benchmark::DoNotOptimize(backprop(net, cache, g));
    }
    state.SetItemsProcessed(state.iterations() * kBatch);
}

void BM_gp_param_gradient(benchmark::State& state)
{
    const GanModel m = gan_model();
    const Matrix x = noise(5, kBatch, 2 * kDim);
    for (auto _ : state) benchmark::DoNotOptimize(gp_param_gradient(m.critic, x, 1.0, kDim));
    state.SetItemsProcessed(state.iterations() * kBatch);
}

void BM_critic_loss(benchmark::State& state)
{
    const GanModel m = gan_model();
    const Matrix ground = noise(6, kBatch, kDim).cwiseAbs(), aerial = noise(7, kBatch, kDim).cwiseAbs();
    const Matrix z = noise(8, kBatch, m.generator_spec.noise_dim);
    const Vector t = Vector::Constant(kBatch, 0.3);
    for (auto _ : state) benchmark::DoNotOptimize(critic_loss(m.generator, m.critic, ground, aerial, z, t, 10.0));
    state.SetItemsProcessed(state.iterations() * kBatch);
}

void BM_generator_loss(benchmark::State& state)
{
    const GanModel m = gan_model();
    const ParamBundle cls = init_params(std::vector<LayerSpec>{{kDim, 8, Activation::linear}}, 9);
    const Matrix ground = noise(10, kBatch, kDim).cwiseAbs();
    const Matrix z = noise(11, kBatch, m.generator_spec.noise_dim);
    const auto y = labels(kBatch, 8);
    for (auto _ : state) benchmark::DoNotOptimize(generator_loss(m.generator, m.critic, cls, ground, y, z, 0.01));
    state.SetItemsProcessed(state.iterations() * kBatch);
}

void BM_dml_step(benchmark::State& state)
{
    DmlConfig cfg;
    DmlNet net = build_dml(kDim, 8, 7, 12, cfg);
    DmlAdam adam = DmlAdam::zeros_for(net);
    const LabeledBatch real{noise(13, 32, kDim), labels(32, 8)};
    const LabeledBatch aux{noise(14, 32, kDim), labels(32, 7)};
    for (auto _ : state) benchmark::DoNotOptimize(dml_step(net, adam, real, aux, cfg.weights, cfg));
    state.SetItemsProcessed(state.iterations() * 64);
}

} // namespace

BENCHMARK(BM_forward_backprop);
BENCHMARK(BM_gp_param_gradient);
BENCHMARK(BM_critic_loss);
BENCHMARK(BM_generator_loss);
BENCHMARK(BM_dml_step);

BENCHMARK_MAIN();
