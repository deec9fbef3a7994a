#include "fsdml/nn.hpp"

#include <cmath>
#include <cstring>

#include "fsdml/errors.hpp"
#include "fsdml/rng.hpp"

namespace fsdml {

std::string to_string(Activation act)
{
    switch (act) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::softmax: return "softmax";
    }
    return "linear";
}

Activation activation_from_string(const std::string& name)
{
    if (name == "linear") return Activation::linear;
    if (name == "relu") return Activation::relu;
    if (name == "leaky_relu") return Activation::leaky_relu;
    if (name == "softmax") return Activation::softmax;
    throw ConfigError("unknown activation '" + name + "'");
}

void validate_specs(std::span<const LayerSpec> specs)
{
    if (specs.empty()) throw ConfigError("network needs at least one layer");
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& s = specs[i];
        if (s.input_dim < 1 || s.output_dim < 1)
            throw ConfigError("layer " + std::to_string(i) + " has a non-positive dimension");
        if (s.activation == Activation::leaky_relu && !(s.slope > 0.0 && s.slope < 1.0))
            throw ConfigError("layer " + std::to_string(i) + " leaky slope must lie in (0,1)");
        if (s.activation == Activation::softmax && i + 1 != specs.size())
            throw ConfigError("softmax is only allowed as the final layer");
        if (i > 0 && specs[i - 1].output_dim != s.input_dim)
            throw ConfigError("layer " + std::to_string(i) + " input_dim " +
                              std::to_string(s.input_dim) + " does not match previous output_dim " +
                              std::to_string(specs[i - 1].output_dim));
    }
}

std::size_t ParamBundle::parameter_count() const
{
    std::size_t n = 0;
    for (std::size_t i = 0; i < weights.size(); ++i)
        n += static_cast<std::size_t>(weights[i].size() + biases[i].size());
    return n;
}

bool ParamBundle::all_finite() const
{
    for (std::size_t i = 0; i < weights.size(); ++i)
        if (!weights[i].allFinite() || !biases[i].allFinite()) return false;
    return true;
}

double& ParamBundle::at(std::size_t flat_index)
{
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const auto nw = static_cast<std::size_t>(weights[i].size());
        if (flat_index < nw) return weights[i].data()[flat_index];
        flat_index -= nw;
        const auto nb = static_cast<std::size_t>(biases[i].size());
        if (flat_index < nb) return biases[i].data()[flat_index];
        flat_index -= nb;
    }
    throw InputError("parameter index out of range");
}

double ParamBundle::at(std::size_t flat_index) const
{
    return const_cast<ParamBundle&>(*this).at(flat_index);
}

ParamBundle& ParamBundle::operator+=(const ParamBundle& other)
{
    require_same_shape(*this, other);
    for (std::size_t i = 0; i < weights.size(); ++i) {
        weights[i] += other.weights[i];
        biases[i] += other.biases[i];
    }
    return *this;
}

ParamBundle& ParamBundle::operator*=(double scale)
{
    for (std::size_t i = 0; i < weights.size(); ++i) {
        weights[i] *= scale;
        biases[i] *= scale;
    }
    return *this;
}

bool ParamBundle::operator==(const ParamBundle& other) const
{
    if (specs != other.specs) return false;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i].rows() != other.weights[i].rows() ||
            weights[i].cols() != other.weights[i].cols())
            return false;
        if (std::memcmp(weights[i].data(), other.weights[i].data(),
                        sizeof(double) * static_cast<std::size_t>(weights[i].size())) != 0)
            return false;
        if (biases[i].size() != other.biases[i].size()) return false;
        if (std::memcmp(biases[i].data(), other.biases[i].data(),
                        sizeof(double) * static_cast<std::size_t>(biases[i].size())) != 0)
            return false;
    }
    return true;
}

ParamBundle init_params(std::span<const LayerSpec> specs, std::uint64_t seed)
{
    validate_specs(specs);
    ParamBundle p;
    p.specs.assign(specs.begin(), specs.end());
    Rng rng{seed};
    for (const auto& s : specs) {
        const double limit = std::sqrt(6.0 / static_cast<double>(s.input_dim + s.output_dim));
        std::uniform_real_distribution<double> dist(-limit, limit);
        Matrix w(s.output_dim, s.input_dim);
        for (int r = 0; r < s.output_dim; ++r)
            for (int c = 0; c < s.input_dim; ++c) w(r, c) = dist(rng);
        p.weights.push_back(std::move(w));
        p.biases.push_back(Vector::Zero(s.output_dim));
    }
    return p;
}

ParamBundle zeros_like(const ParamBundle& params)
{
    ParamBundle z;
    z.specs = params.specs;
    for (std::size_t i = 0; i < params.weights.size(); ++i) {
        z.weights.push_back(Matrix::Zero(params.weights[i].rows(), params.weights[i].cols()));
        z.biases.push_back(Vector::Zero(params.biases[i].size()));
    }
    return z;
}

void require_same_shape(const ParamBundle& a, const ParamBundle& b)
{
    if (a.weights.size() != b.weights.size()) throw ShapeError("layer count mismatch");
    for (std::size_t i = 0; i < a.weights.size(); ++i) {
        if (a.weights[i].rows() != b.weights[i].rows() || a.weights[i].cols() != b.weights[i].cols() ||
            a.biases[i].size() != b.biases[i].size())
            throw ShapeError("shape mismatch at layer " + std::to_string(i));
    }
}

std::uint64_t checksum(const ParamBundle& params)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](const double* data, Eigen::Index n) {
        const auto* bytes = reinterpret_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < sizeof(double) * static_cast<std::size_t>(n); ++i) {
            h ^= bytes[i];
            h *= 0x100000001b3ULL;
        }
    };
    for (std::size_t i = 0; i < params.weights.size(); ++i) {
        feed(params.weights[i].data(), params.weights[i].size());
        feed(params.biases[i].data(), params.biases[i].size());
    }
    return h;
}

namespace {

Matrix activate(const Matrix& z, const LayerSpec& spec)
{
    switch (spec.activation) {
    case Activation::linear: return z;
    case Activation::relu: return z.cwiseMax(0.0);
    case Activation::leaky_relu: {
        const double slope = spec.slope;
        return z.unaryExpr([slope](double v) { return v >= 0.0 ? v : slope * v; });
    }
    case Activation::softmax: return softmax_rows(z);
    }
    return z;
}

// Derivative of an elementwise activation; 1 at exactly 0 for the rectifiers.
Matrix activation_mask(const Matrix& z, const LayerSpec& spec)
{
    switch (spec.activation) {
    case Activation::linear: return Matrix::Ones(z.rows(), z.cols());
    case Activation::relu: return z.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : 0.0; });
    case Activation::leaky_relu: {
        const double slope = spec.slope;
        return z.unaryExpr([slope](double v) { return v >= 0.0 ? 1.0 : slope; });
    }
    case Activation::softmax: break;
    }
    throw ConfigError("softmax has no elementwise derivative");
}

Gradients backprop_impl(const ParamBundle& net, const ForwardCache& cache, Matrix delta)
{
    const std::size_t L = net.num_layers();
    Gradients g{zeros_like(net), Matrix{}};
    for (std::size_t idx = L; idx-- > 0;) {
        g.params.weights[idx].noalias() = delta.transpose() * cache.post[idx];
        g.params.biases[idx] = delta.colwise().sum().transpose();
        Matrix upstream = delta * net.weights[idx];
        if (idx > 0) {
            delta = upstream.cwiseProduct(activation_mask(cache.pre[idx - 1], net.specs[idx - 1]));
        } else {
            g.input = std::move(upstream);
        }
    }
    return g;
}

void check_output_grad(const ForwardCache& cache, const Matrix& grad)
{
    if (cache.post.empty()) throw ShapeError("empty forward cache");
    if (grad.rows() != cache.output().rows() || grad.cols() != cache.output().cols())
        throw ShapeError("output gradient shape does not match network output");
}

} // namespace

ForwardCache forward(const ParamBundle& net, const Matrix& batch)
{
    if (batch.cols() != net.input_dim())
        throw ShapeError("batch width " + std::to_string(batch.cols()) +
                         " does not match network input_dim " + std::to_string(net.input_dim()));
    ForwardCache cache;
    cache.pre.reserve(net.num_layers());
    cache.post.reserve(net.num_layers() + 1);
    cache.post.push_back(batch);
    for (std::size_t i = 0; i < net.num_layers(); ++i) {
        Matrix z = cache.post.back() * net.weights[i].transpose();
        z.rowwise() += net.biases[i].transpose();
        cache.post.push_back(activate(z, net.specs[i]));
        cache.pre.push_back(std::move(z));
    }
    return cache;
}

Matrix predict(const ParamBundle& net, const Matrix& batch)
{
    return forward(net, batch).output();
}

Gradients backprop(const ParamBundle& net, const ForwardCache& cache, const Matrix& output_grad)
{
    check_output_grad(cache, output_grad);
    const auto& last = net.specs.back();
    Matrix delta;
    if (last.activation == Activation::softmax) {
        const Matrix& p = cache.output();
        const Vector inner = (output_grad.cwiseProduct(p)).rowwise().sum();
        delta = p.cwiseProduct(output_grad.colwise() - inner);
    } else {
        delta = output_grad.cwiseProduct(activation_mask(cache.logits(), last));
    }
    return backprop_impl(net, cache, std::move(delta));
}

Gradients backprop_from_logits(const ParamBundle& net, const ForwardCache& cache,
                               const Matrix& logit_grad)
{
    check_output_grad(cache, logit_grad);
    return backprop_impl(net, cache, logit_grad);
}

Vector softmax(const Vector& logits)
{
    const double m = logits.maxCoeff();
    Vector e = (logits.array() - m).exp().matrix();
    return e / e.sum();
}

Matrix softmax_rows(const Matrix& logits)
{
    Matrix out(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r)
        out.row(r) = softmax(logits.row(r).transpose()).transpose();
    return out;
}

double cross_entropy(const Vector& probs, int label)
{
    if (label < 0 || label >= probs.size())
        throw InputError("label " + std::to_string(label) + " outside [0, " +
                         std::to_string(probs.size()) + ")");
    return -std::log(std::max(probs[label], kProbabilityFloor));
}

LossAndGrad softmax_cross_entropy(const Matrix& probs, std::span<const int> labels)
{
    if (static_cast<Eigen::Index>(labels.size()) != probs.rows())
        throw ShapeError("label count does not match batch size");
    LossAndGrad out{0.0, Matrix::Zero(probs.rows(), probs.cols())};
    if (probs.rows() == 0) return out;
    const double inv_n = 1.0 / static_cast<double>(probs.rows());
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
        const int y = labels[static_cast<std::size_t>(r)];
        out.loss += cross_entropy(probs.row(r).transpose(), y);
        // The floor makes the loss flat in the clamped region.
        if (probs(r, y) >= kProbabilityFloor) {
            out.grad.row(r) = probs.row(r) * inv_n;
            out.grad(r, y) -= inv_n;
        }
    }
    out.loss *= inv_n;
    return out;
}

LossAndGrad soft_cross_entropy(const Matrix& probs, const Matrix& targets)
{
    if (probs.rows() != targets.rows() || probs.cols() != targets.cols())
        throw ShapeError("soft targets shape does not match probabilities");
    LossAndGrad out{0.0, Matrix::Zero(probs.rows(), probs.cols())};
    if (probs.rows() == 0) return out;
    const double inv_n = 1.0 / static_cast<double>(probs.rows());
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
        for (Eigen::Index c = 0; c < probs.cols(); ++c) {
            if (targets(r, c) != 0.0)
                out.loss -= targets(r, c) * std::log(std::max(probs(r, c), kProbabilityFloor));
        }
        const double mass = targets.row(r).sum();
        out.grad.row(r) = (probs.row(r) * mass - targets.row(r)) * inv_n;
    }
    out.loss *= inv_n;
    return out;
}

std::vector<int> argmax_rows(const Matrix& m)
{
    std::vector<int> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < m.cols(); ++c)
            if (m(r, c) > m(r, best)) best = c;
        out[static_cast<std::size_t>(r)] = static_cast<int>(best);
    }
    return out;
}

namespace {

void require_scalar_critic(const ParamBundle& critic)
{
    const auto& last = critic.specs.back();
    if (last.output_dim != 1 || last.activation != Activation::linear)
        throw ConfigError("critic must end in a scalar linear layer");
    for (const auto& s : critic.specs)
        if (s.activation == Activation::softmax) throw ConfigError("softmax is not allowed in a critic");
}

// Per-sample backward vectors of the scalar output with respect to each
// layer's pre-activation: v[i] = dD/dz_i, shape n x out_i.
std::vector<Matrix> output_sensitivities(const ParamBundle& critic, const ForwardCache& cache,
                                         std::vector<Matrix>& masks)
{
    const std::size_t L = critic.num_layers();
    std::vector<Matrix> v(L);
    masks.assign(L, Matrix{});
    const Eigen::Index n = cache.post.front().rows();
    v[L - 1] = Matrix::Ones(n, 1);
    for (std::size_t i = L - 1; i-- > 0;) {
        masks[i] = activation_mask(cache.pre[i], critic.specs[i]);
        v[i] = (v[i + 1] * critic.weights[i + 1]).cwiseProduct(masks[i]);
    }
    return v;
}

} // namespace

Matrix input_gradients(const ParamBundle& critic, const Matrix& inputs)
{
    require_scalar_critic(critic);
    const ForwardCache cache = forward(critic, inputs);
    std::vector<Matrix> masks;
    const auto v = output_sensitivities(critic, cache, masks);
    return v[0] * critic.weights[0];
}

Vector input_gradient(const ParamBundle& critic, const Vector& point, const Vector& condition)
{
    Matrix x(1, point.size() + condition.size());
    x << point.transpose(), condition.transpose();
    return input_gradients(critic, x).row(0).transpose();
}

PenaltyResult gp_param_gradient(const ParamBundle& critic, const Matrix& inputs,
                                double target_norm, int penalized_dims)
{
    require_scalar_critic(critic);
    if (penalized_dims < 1 || penalized_dims > critic.input_dim())
        throw ShapeError("penalized_dims must lie in [1, input_dim]");
    const std::size_t L = critic.num_layers();
    const Eigen::Index n = inputs.rows();

    PenaltyResult out{0.0, zeros_like(critic), Vector::Zero(n)};
    if (n == 0) return out;

    const ForwardCache cache = forward(critic, inputs);
    std::vector<Matrix> masks;
    const auto v = output_sensitivities(critic, cache, masks);
    const Matrix grad_in = v[0] * critic.weights[0];

    // d penalty / d grad_in, restricted to the penalized columns.
    Matrix g_bar = Matrix::Zero(n, grad_in.cols());
    const double inv_n = 1.0 / static_cast<double>(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto gm = grad_in.row(r).head(penalized_dims);
        const double norm = gm.norm();
        out.norms[r] = norm;
        const double diff = norm - target_norm;
        out.penalty += diff * diff;
        if (norm > 0.0) g_bar.row(r).head(penalized_dims) = (2.0 * diff * inv_n / norm) * gm;
    }
    out.penalty *= inv_n;

    // Reverse sweep through grad_in = v0 W0, v_i = (v_{i+1} W_{i+1}) .* mask_i.
    // Masks are locally constant in the parameters, so bias gradients vanish.
    out.grads.weights[0].noalias() = v[0].transpose() * g_bar;
    Matrix v_bar = g_bar * critic.weights[0].transpose();
    for (std::size_t i = 0; i + 1 < L; ++i) {
        const Matrix h_bar = v_bar.cwiseProduct(masks[i]);
        out.grads.weights[i + 1].noalias() = v[i + 1].transpose() * h_bar;
        v_bar = h_bar * critic.weights[i + 1].transpose();
    }
    return out;
}

} // namespace fsdml
