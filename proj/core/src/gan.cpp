#include "fsdml/gan.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>

#include "fsdml/errors.hpp"
#include "fsdml/rng.hpp"

namespace fsdml {

namespace {

std::vector<LayerSpec> four_layers(int input_dim, const std::vector<int>& hidden, int output_dim,
                                   Activation last, double slope)
{
    if (hidden.size() != 3) throw ConfigError("generator and critic need exactly three hidden layer sizes");
    std::vector<LayerSpec> specs;
    int in = input_dim;
    for (int h : hidden) {
        specs.push_back(LayerSpec{in, h, Activation::leaky_relu, slope});
        in = h;
    }
    specs.push_back(LayerSpec{in, output_dim, last, slope});
    validate_specs(specs);
    return specs;
}

} // namespace

std::vector<LayerSpec> GeneratorSpec::layers() const
{
    return four_layers(noise_dim + condition_dim, hidden, output_dim, Activation::relu, leaky_slope);
}

std::vector<LayerSpec> CriticSpec::layers() const
{
    return four_layers(feature_dim + condition_dim, hidden, 1, Activation::linear, leaky_slope);
}

void GanConfig::validate() const
{
    if (noise_dim < 1) throw ConfigError("noise_dim must be positive");
    if (lambda_gp < 0.0) throw ConfigError("lambda_gp must be non-negative");
    if (beta_cls < 0.0) throw ConfigError("beta_cls must be non-negative");
    if (n_critic < 1) throw ConfigError("n_critic must be at least 1");
    if (batch_size < 1) throw ConfigError("gan batch size must be positive");
    if (epochs < 0) throw ConfigError("gan epochs must be non-negative");
    if (generator_hidden.size() != 3 || critic_hidden.size() != 3)
        throw ConfigError("generator and critic need exactly three hidden layer sizes");
    critic_adam.validate();
    generator_adam.validate();
}

Matrix concat_cols(const Matrix& first, const Matrix& second)
{
    if (first.rows() != second.rows()) throw ShapeError("concat_cols: row count mismatch");
    Matrix out(first.rows(), first.cols() + second.cols());
    out << first, second;
    return out;
}

ParamBundle pretrain_classifier(const Dataset& few_aerial, const ClassifierConfig& config, std::uint64_t seed)
{
    if (few_aerial.empty()) throw DatasetError("classifier pre-training needs at least one record");
    if (few_aerial.num_classes() < 2) throw DatasetError("classifier pre-training needs at least two classes");
    const auto counts = few_aerial.class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c)
        if (counts[c] == 0) throw DatasetError("class '" + few_aerial.label_space()[c] + "' has no examples");
    config.adam.validate();

    const std::vector<LayerSpec> specs{{few_aerial.dim(), few_aerial.num_classes(), Activation::softmax}};
    ParamBundle net = init_params(specs, derive_seed(seed, "classifier"));
    AdamState state = AdamState::zeros_for(net);
    const Matrix x = few_aerial.feature_matrix();
    const auto y = few_aerial.class_indices();
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const ForwardCache cache = forward(net, x);
        const LossAndGrad ce = softmax_cross_entropy(cache.output(), y);
        if (!std::isfinite(ce.loss)) throw TrainingError("classifier loss diverged at epoch " + std::to_string(epoch));
        adam_step(state, net, backprop_from_logits(net, cache, ce.grad).params, config.adam);
    }
    return net;
}

CriticLossResult critic_loss(const ParamBundle& generator, const ParamBundle& critic, const Matrix& ground_batch,
                             const Matrix& aerial_batch, const Matrix& noise, const Vector& t, double lambda_gp,
                             const CriticLossOptions& options)
{
    const Eigen::Index n = ground_batch.rows();
    if (aerial_batch.rows() != n || noise.rows() != n || t.size() != n)
        throw ShapeError("critic_loss: ground, aerial, noise and t must have equal batch size");
    if (n == 0) throw InputError("critic_loss: empty batch");
    const int feature_dim = static_cast<int>(aerial_batch.cols());

    const Matrix fake = predict(generator, concat_cols(noise, ground_batch));
    const ForwardCache fake_cache = forward(critic, concat_cols(fake, ground_batch));
    const ForwardCache real_cache = forward(critic, concat_cols(aerial_batch, ground_batch));
    const Vector d_fake = fake_cache.output().col(0);
    const Vector d_real = real_cache.output().col(0);
    if (!d_fake.allFinite() || !d_real.allFinite()) throw TrainingError("critic output is not finite");

    const double inv_n = 1.0 / static_cast<double>(n);
    CriticLossResult out;
    out.report.critic_wasserstein_gap = d_fake.mean() - d_real.mean();

    Matrix real_grad(n, 1);
    double real_term = 0.0;
    if (options.eq2_literal) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double v = d_real[i];
            real_term -= std::log(std::max(v, kProbabilityFloor));
            real_grad(i, 0) = v > kProbabilityFloor ? -inv_n / v : 0.0;
        }
        real_term *= inv_n;
    } else {
        real_term = -d_real.mean();
        real_grad.setConstant(-inv_n);
    }

    const Matrix& anchor = options.interpolate_real_aerial ? aerial_batch : ground_batch;
    if (anchor.cols() != feature_dim)
        throw ConfigError("interpolating between generated and ground features requires equal dimensions");
    out.interpolates.t = t;
    out.interpolates.points = (fake.array().colwise() * t.array() + anchor.array().colwise() * (1.0 - t.array())).matrix();
    out.interpolates.condition = ground_batch;
    PenaltyResult gp = gp_param_gradient(critic, concat_cols(out.interpolates.points, ground_batch), 1.0, feature_dim);
    out.report.gradient_penalty = gp.penalty;

    out.loss = d_fake.mean() + real_term + lambda_gp * gp.penalty;
    if (!std::isfinite(out.loss)) throw TrainingError("critic loss is not finite");

    out.critic_grads = backprop(critic, fake_cache, Matrix::Constant(n, 1, inv_n)).params;
    out.critic_grads += backprop(critic, real_cache, real_grad).params;
    gp.grads *= lambda_gp;
    out.critic_grads += gp.grads;
    return out;
}

GeneratorLossResult generator_loss(const ParamBundle& generator, const ParamBundle& critic,
                                   const ParamBundle& classifier, const Matrix& ground_batch,
                                   std::span<const int> ground_labels, const Matrix& noise, double beta_cls)
{
    const Eigen::Index n = ground_batch.rows();
    if (noise.rows() != n || static_cast<Eigen::Index>(ground_labels.size()) != n)
        throw ShapeError("generator_loss: batch sizes disagree");
    if (n == 0) throw InputError("generator_loss: empty batch");
    for (int y : ground_labels)
        if (y < 0 || y >= classifier.output_dim())
            throw DatasetError("label " + std::to_string(y) + " is outside the classifier's label space");

    const ForwardCache gen_cache = forward(generator, concat_cols(noise, ground_batch));
    const Matrix& fake = gen_cache.output();
    const int feature_dim = static_cast<int>(fake.cols());

    const ForwardCache critic_cache = forward(critic, concat_cols(fake, ground_batch));
    const double inv_n = 1.0 / static_cast<double>(n);
    const double adversarial = -critic_cache.output().col(0).mean();
    Matrix d_fake = backprop(critic, critic_cache, Matrix::Constant(n, 1, -inv_n)).input.leftCols(feature_dim);

    const ForwardCache cls_cache = forward(classifier, fake);
    LossAndGrad ce = softmax_cross_entropy(cls_cache.output(), ground_labels);
    if (beta_cls != 0.0) {
        ce.grad *= beta_cls;
        d_fake += backprop_from_logits(classifier, cls_cache, ce.grad).input;
    }

    GeneratorLossResult out;
    out.report.generator_adversarial = adversarial;
    out.report.classification_loss = ce.loss;
    out.loss = adversarial + beta_cls * ce.loss;
    if (!std::isfinite(out.loss)) throw TrainingError("generator loss is not finite");
    out.generator_grads = backprop(generator, gen_cache, d_fake).params;
    return out;
}

namespace {

Matrix gaussian_noise(Rng& rng, Eigen::Index rows, int cols)
{
    std::normal_distribution<double> nd(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = nd(rng);
    return m;
}

Vector uniform_t(Rng& rng, Eigen::Index n)
{
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    Vector t(n);
    for (Eigen::Index i = 0; i < n; ++i) t[i] = ud(rng);
    return t;
}

std::vector<std::size_t> sample_rows(Rng& rng, std::vector<std::size_t>& pool, std::size_t count)
{
    // Partial Fisher-Yates over a persistent pool.
    for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    return {pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count)};
}

std::vector<std::size_t> iota_pool(std::size_t n)
{
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), std::size_t{0});
    return v;
}

void check_gan_inputs(const Dataset& ground, const Dataset& few_aerial, const CriticLossOptions& options)
{
    if (ground.empty()) throw DatasetError("GAN training needs ground records");
    if (few_aerial.empty()) throw DatasetError("GAN training needs real aerial records");
    if (ground.label_space() != few_aerial.label_space())
        throw DatasetError("ground and aerial label spaces differ");
    if (!options.interpolate_real_aerial && ground.dim() != few_aerial.dim())
        throw ConfigError("ground and aerial feature dimensions must match (or enable interpolate-real-aerial)");
}

} // namespace

GanTrainResult train_wcgan(const Dataset& ground, const Dataset& few_aerial, const ParamBundle& classifier,
                           const GanConfig& config, std::uint64_t seed)
{
    config.validate();
    check_gan_inputs(ground, few_aerial, config.options);
    if (classifier.input_dim() != few_aerial.dim() || classifier.output_dim() != few_aerial.num_classes())
        throw ConfigError("classifier shape does not match the aerial dataset");

    for (const auto& r : few_aerial.records()) {
        if (std::any_of(r.features.begin(), r.features.end(), [](double v) { return v < 0.0; })) {
            std::cerr << "WARNING: real aerial features contain negative values (first: '" << r.id
                      << "'); the generator's ReLU output cannot reproduce them\n";
            break;
        }
    }

    GanTrainResult result;
    GanModel& m = result.model;
    m.generator_spec = GeneratorSpec{config.noise_dim, ground.dim(), few_aerial.dim(), config.generator_hidden,
                                     config.leaky_slope};
    const CriticSpec critic_spec{few_aerial.dim(), ground.dim(), config.critic_hidden, config.leaky_slope};
    m.generator = init_params(m.generator_spec.layers(), derive_seed(seed, "generator"));
    m.critic = init_params(critic_spec.layers(), derive_seed(seed, "critic"));
    m.generator_adam = AdamState::zeros_for(m.generator);
    m.critic_adam = AdamState::zeros_for(m.critic);

    const std::size_t batch = std::min({static_cast<std::size_t>(config.batch_size), ground.size(), few_aerial.size()});
    const auto n = static_cast<Eigen::Index>(batch);
    const std::size_t iters = (ground.size() + batch - 1) / batch;
    const Matrix ground_x = ground.feature_matrix();
    const Matrix aerial_x = few_aerial.feature_matrix();
    const auto ground_y = ground.class_indices();
    auto ground_pool = iota_pool(ground.size());
    auto aerial_pool = iota_pool(few_aerial.size());
    Rng rng = make_rng(seed, "gan-train");

    auto gather = [](const Matrix& src, const std::vector<std::size_t>& rows) {
        Matrix out(static_cast<Eigen::Index>(rows.size()), src.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = src.row(static_cast<Eigen::Index>(rows[i]));
        return out;
    };

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        GanLossReport acc;
        double critic_count = 0.0;
        double gen_count = 0.0;
        try {
            for (std::size_t it = 0; it < iters; ++it) {
                for (int c = 0; c < config.n_critic; ++c) {
                    const Matrix g = gather(ground_x, sample_rows(rng, ground_pool, batch));
                    const Matrix a = gather(aerial_x, sample_rows(rng, aerial_pool, batch));
                    const Matrix z = gaussian_noise(rng, n, config.noise_dim);
                    const Vector t = uniform_t(rng, n);
                    const auto res = critic_loss(m.generator, m.critic, g, a, z, t, config.lambda_gp, config.options);
                    adam_step(m.critic_adam, m.critic, res.critic_grads, config.critic_adam);
                    acc.critic_wasserstein_gap += res.report.critic_wasserstein_gap;
                    acc.gradient_penalty += res.report.gradient_penalty;
                    critic_count += 1.0;
                    result.critic_steps += 1;
                }
                const auto rows = sample_rows(rng, ground_pool, batch);
                const Matrix g = gather(ground_x, rows);
                std::vector<int> y;
                y.reserve(rows.size());
                for (auto r : rows) y.push_back(ground_y[r]);
                const Matrix z = gaussian_noise(rng, n, config.noise_dim);
                const auto res = generator_loss(m.generator, m.critic, classifier, g, y, z, config.beta_cls);
                adam_step(m.generator_adam, m.generator, res.generator_grads, config.generator_adam);
                acc.generator_adversarial += res.report.generator_adversarial;
                acc.classification_loss += res.report.classification_loss;
                gen_count += 1.0;
                result.generator_steps += 1;
            }
        } catch (const TrainingError& e) {
            throw TrainingError("GAN training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
        }
        if (!m.generator.all_finite() || !m.critic.all_finite())
            throw TrainingError("GAN parameters became non-finite at epoch " + std::to_string(epoch));
        if (critic_count > 0) {
            acc.critic_wasserstein_gap /= critic_count;
            acc.gradient_penalty /= critic_count;
        }
        if (gen_count > 0) {
            acc.generator_adversarial /= gen_count;
            acc.classification_loss /= gen_count;
        }
        result.log.push_back(acc);
    }
    return result;
}

double mean_gradient_norm_deviation(const GanModel& model, const Dataset& ground, const Dataset& few_aerial,
                                    const CriticLossOptions& options, int count, std::uint64_t seed)
{
    check_gan_inputs(ground, few_aerial, options);
    if (count < 1) throw InputError("count must be positive");
    Rng rng = make_rng(seed, "gp-probe");
    std::uniform_int_distribution<std::size_t> pick_g(0, ground.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_a(0, few_aerial.size() - 1);
    const auto n = static_cast<Eigen::Index>(count);
    std::vector<std::size_t> g_rows, a_rows;
    for (int i = 0; i < count; ++i) {
        g_rows.push_back(pick_g(rng));
        a_rows.push_back(pick_a(rng));
    }
    const Matrix g = ground.feature_matrix(g_rows);
    const Matrix a = few_aerial.feature_matrix(a_rows);
    const Matrix z = gaussian_noise(rng, n, model.generator_spec.noise_dim);
    const Vector t = uniform_t(rng, n);
    const Matrix fake = predict(model.generator, concat_cols(z, g));
    const Matrix& anchor = options.interpolate_real_aerial ? a : g;
    const Matrix pts = (fake.array().colwise() * t.array() + anchor.array().colwise() * (1.0 - t.array())).matrix();
    const Matrix grads = input_gradients(model.critic, concat_cols(pts, g));
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) total += std::abs(grads.row(i).head(fake.cols()).norm() - 1.0);
    return total / static_cast<double>(count);
}

Dataset synthesize_features(const GanModel& model, const Dataset& ground, int per_record, std::uint64_t seed)
{
    if (per_record < 0) throw InputError("per_record must be non-negative");
    if (ground.empty() && per_record > 0) throw DatasetError("synthesis needs ground records");
    if (per_record == 0) return Dataset({}, ground.label_space());
    if (ground.dim() != model.generator_spec.condition_dim)
        throw ShapeError("ground dimension does not match the generator's condition dimension");

    const auto total = static_cast<Eigen::Index>(ground.size() * static_cast<std::size_t>(per_record));
    Matrix cond(total, ground.dim());
    const Matrix gx = ground.feature_matrix();
    for (std::size_t i = 0; i < ground.size(); ++i)
        for (int j = 0; j < per_record; ++j)
            cond.row(static_cast<Eigen::Index>(i) * per_record + j) = gx.row(static_cast<Eigen::Index>(i));
    Rng rng = make_rng(seed, "synthesize");
    const Matrix z = gaussian_noise(rng, total, model.generator_spec.noise_dim);
    const Matrix fake = predict(model.generator, concat_cols(z, cond));

    std::vector<FeatureRecord> out;
    out.reserve(static_cast<std::size_t>(total));
    for (std::size_t i = 0; i < ground.size(); ++i) {
        const auto& src = ground.records()[i];
        for (int j = 0; j < per_record; ++j) {
            const auto row = static_cast<Eigen::Index>(i) * per_record + j;
            FeatureRecord r{"gen-" + src.id + "-" + std::to_string(j), src.label, Domain::generated_aerial,
                            std::vector<double>(static_cast<std::size_t>(fake.cols()))};
            for (Eigen::Index c = 0; c < fake.cols(); ++c) r.features[static_cast<std::size_t>(c)] = fake(row, c);
            out.push_back(std::move(r));
        }
    }
    return Dataset(std::move(out), ground.label_space());
}

std::string format_gan_log(const std::vector<GanLossReport>& log)
{
    std::string out = "epoch,critic_wasserstein_gap,gradient_penalty,generator_adversarial,classification_loss\n";
    char buf[256];
    for (std::size_t e = 0; e < log.size(); ++e) {
        const auto& r = log[e];
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", e, r.critic_wasserstein_gap,
                      r.gradient_penalty, r.generator_adversarial, r.classification_loss);
        out += buf;
    }
    return out;
}

} // namespace fsdml
