#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fsdml/data.hpp"
#include "fsdml/nn.hpp"
#include "fsdml/optim.hpp"

namespace fsdml {

/// Four dense layers: three leaky-ReLU hidden layers and a ReLU output.
/// Input is the noise vector followed by the ground (condition) feature.
struct GeneratorSpec {
    int noise_dim = 312;
    int condition_dim = 0;
    int output_dim = 0;
    std::vector<int> hidden{128, 128, 128};
    double leaky_slope = kDefaultLeakySlope;

    std::vector<LayerSpec> layers() const;
};

/// Four dense layers: three leaky-ReLU hidden layers and a scalar linear
/// output. Input is the (real, generated or interpolated) feature followed by
/// the condition.
struct CriticSpec {
    int feature_dim = 0;
    int condition_dim = 0;
    std::vector<int> hidden{128, 128, 128};
    double leaky_slope = kDefaultLeakySlope;

    std::vector<LayerSpec> layers() const;
};

struct ClassifierConfig {
    int epochs = 300;                    ///< full-batch Adam steps
    AdamHyper adam = classifier_adam_defaults();
};

struct GanLossReport {
    double critic_wasserstein_gap = 0.0; ///< mean D(generated) - mean D(real aerial)
    double gradient_penalty = 0.0;
    double generator_adversarial = 0.0;  ///< -mean D(generated)
    double classification_loss = 0.0;

    bool operator==(const GanLossReport&) const = default;
};

struct CriticLossOptions {
    bool eq2_literal = false;             ///< use -E[log D(real)] for the real-sample term
    bool interpolate_real_aerial = false; ///< interpolate towards real aerial instead of the ground condition
};

struct GanConfig {
    int noise_dim = 312;
    std::vector<int> generator_hidden{128, 128, 128};
    std::vector<int> critic_hidden{128, 128, 128};
    double leaky_slope = kDefaultLeakySlope;
    double lambda_gp = 10.0;
    double beta_cls = 0.01;
    int n_critic = 5;
    int batch_size = 64;
    int epochs = 20; ///< one epoch = ceil(|ground| / batch) generator steps
    AdamHyper critic_adam = gan_adam_defaults();
    AdamHyper generator_adam = gan_adam_defaults();
    CriticLossOptions options;

    void validate() const;
};

/// Linear softmax classifier trained on the k-shot real aerial set. Frozen
/// afterwards and only consulted by the generator's classification loss.
ParamBundle pretrain_classifier(const Dataset& few_aerial, const ClassifierConfig& config, std::uint64_t seed);

/// Builds rows [first | second].
Matrix concat_cols(const Matrix& first, const Matrix& second);

struct InterpolationBatch {
    Vector t;
    Matrix points;    ///< t * generated + (1 - t) * anchor
    Matrix condition;
};

struct CriticLossResult {
    double loss = 0.0;
    GanLossReport report;
    ParamBundle critic_grads;
    InterpolationBatch interpolates;
};

/// Critic objective (minimized over the critic):
///   E[D(G(z,c)|c)] - E[D(a|c)] + lambda * E[(||grad_m D(m|c)||_2 - 1)^2],
/// c = ground batch, a = real aerial batch, m = t G(z,c) + (1-t) c.
/// `noise` is n x noise_dim, `t` has n entries in [0,1].
CriticLossResult critic_loss(const ParamBundle& generator, const ParamBundle& critic, const Matrix& ground_batch,
                             const Matrix& aerial_batch, const Matrix& noise, const Vector& t, double lambda_gp,
                             const CriticLossOptions& options = {});

struct GeneratorLossResult {
    double loss = 0.0;
    GanLossReport report;
    ParamBundle generator_grads;
};

/// Generator objective (minimized over the generator only):
///   -E[D(G(z,c)|c)] + beta_cls * E[-log P(y_c | G(z,c))].
GeneratorLossResult generator_loss(const ParamBundle& generator, const ParamBundle& critic,
                                   const ParamBundle& classifier, const Matrix& ground_batch,
                                   std::span<const int> ground_labels, const Matrix& noise, double beta_cls);

struct GanModel {
    GeneratorSpec generator_spec;
    ParamBundle generator;
    ParamBundle critic;
    AdamState generator_adam;
    AdamState critic_adam;
};

struct GanTrainResult {
    GanModel model;
    std::vector<GanLossReport> log; ///< one entry per epoch, averaged over its steps
    std::int64_t critic_steps = 0;
    std::int64_t generator_steps = 0;
};

GanTrainResult train_wcgan(const Dataset& ground, const Dataset& few_aerial, const ParamBundle& classifier,
                           const GanConfig& config, std::uint64_t seed);

/// Mean | ||grad_m D|| - 1 | over `count` fresh interpolates drawn like the
/// training interpolates.
double mean_gradient_norm_deviation(const GanModel& model, const Dataset& ground, const Dataset& few_aerial,
                                    const CriticLossOptions& options, int count, std::uint64_t seed);

/// per_record generated aerial records per ground record, labelled with the
/// ground record's label.
Dataset synthesize_features(const GanModel& model, const Dataset& ground, int per_record, std::uint64_t seed);

std::string format_gan_log(const std::vector<GanLossReport>& log);

} // namespace fsdml
