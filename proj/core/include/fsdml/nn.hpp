#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fsdml {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { linear, relu, leaky_relu, softmax };

std::string to_string(Activation act);
Activation activation_from_string(const std::string& name);

inline constexpr double kDefaultLeakySlope = 0.2;

/// Probabilities below this value are clamped before taking a logarithm.
inline constexpr double kProbabilityFloor = 1e-12;

struct LayerSpec {
    int input_dim = 0;
    int output_dim = 0;
    Activation activation = Activation::linear;
    double slope = kDefaultLeakySlope; ///< only meaningful for leaky_relu

    bool operator==(const LayerSpec&) const = default;
};

/// Throws ConfigError unless the layers chain dimensionally, every dimension
/// is positive, leaky slopes lie in (0,1), and softmax appears only last.
void validate_specs(std::span<const LayerSpec> specs);

/// Weights and biases of one dense feed-forward network. Weight i has shape
/// output_dim x input_dim of specs[i]. Gradients use the same type.
struct ParamBundle {
    std::vector<LayerSpec> specs;
    std::vector<Matrix> weights;
    std::vector<Vector> biases;

    std::size_t num_layers() const { return specs.size(); }
    int input_dim() const { return specs.front().input_dim; }
    int output_dim() const { return specs.back().output_dim; }
    std::size_t parameter_count() const;
    bool all_finite() const;

    /// Flat parameter access: weights of layer 0 (column-major), bias of layer
    /// 0, weights of layer 1, ...
    double& at(std::size_t flat_index);
    double at(std::size_t flat_index) const;

    ParamBundle& operator+=(const ParamBundle& other);
    ParamBundle& operator*=(double scale);

    bool operator==(const ParamBundle& other) const;
};

ParamBundle init_params(std::span<const LayerSpec> specs, std::uint64_t seed);
ParamBundle zeros_like(const ParamBundle& params);
void require_same_shape(const ParamBundle& a, const ParamBundle& b);

/// Bytewise hash of all parameter values; used to assert that an update
/// left a network untouched.
std::uint64_t checksum(const ParamBundle& params);

/// Intermediate values of one forward pass. post[0] is the input batch,
/// post[i+1] = act(pre[i]).
struct ForwardCache {
    std::vector<Matrix> pre;
    std::vector<Matrix> post;

    const Matrix& output() const { return post.back(); }
    const Matrix& logits() const { return pre.back(); }
};

/// Rows of `batch` are samples.
ForwardCache forward(const ParamBundle& net, const Matrix& batch);
Matrix predict(const ParamBundle& net, const Matrix& batch);

struct Gradients {
    ParamBundle params;
    Matrix input; ///< d loss / d batch
};

/// Reverse-mode pass given d loss / d output (post-activation).
Gradients backprop(const ParamBundle& net, const ForwardCache& cache, const Matrix& output_grad);

/// Reverse-mode pass given d loss / d final pre-activation. Used with
/// softmax + cross-entropy, where the logit gradient has a closed form.
Gradients backprop_from_logits(const ParamBundle& net, const ForwardCache& cache,
                               const Matrix& logit_grad);

Vector softmax(const Vector& logits);
Matrix softmax_rows(const Matrix& logits);

/// -log(max(probs[label], kProbabilityFloor)).
double cross_entropy(const Vector& probs, int label);

struct LossAndGrad {
    double loss = 0.0;
    Matrix grad; ///< with respect to logits, already divided by the batch size
};

/// Mean cross-entropy of hard labels against row-wise softmax probabilities.
LossAndGrad softmax_cross_entropy(const Matrix& probs, std::span<const int> labels);

/// Mean cross-entropy against soft target distributions (rows sum to 1).
LossAndGrad soft_cross_entropy(const Matrix& probs, const Matrix& targets);

/// Row-wise argmax, ties resolved to the lowest index.
std::vector<int> argmax_rows(const Matrix& m);

/// Gradient of a scalar-output network with respect to its full input
/// (point followed by condition).
Vector input_gradient(const ParamBundle& critic, const Vector& point, const Vector& condition);

/// Batched input gradients, one row per sample.
Matrix input_gradients(const ParamBundle& critic, const Matrix& inputs);

struct PenaltyResult {
    double penalty = 0.0; ///< mean over rows of (||grad_m D|| - target)^2
    ParamBundle grads;
    Vector norms;         ///< ||grad_m D|| per row
};

/// Gradient penalty and its exact parameter gradient. Only the first
/// `penalized_dims` input columns enter the norm; remaining columns carry the
/// conditioning vector. Hidden activations must be piecewise linear, so the
/// input gradient is a product of weight matrices and fixed activation masks
/// and the second-order pass reduces to a reverse sweep over that product.
PenaltyResult gp_param_gradient(const ParamBundle& critic, const Matrix& inputs,
                                double target_norm, int penalized_dims);

} // namespace fsdml
