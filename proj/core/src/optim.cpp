#include "fsdml/optim.hpp"

#include <algorithm>
#include <cmath>

#include "fsdml/errors.hpp"

namespace fsdml {

void AdamHyper::validate() const
{
    if (!(learning_rate > 0.0)) throw ConfigError("adam learning_rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("adam beta1 must lie in [0,1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("adam beta2 must lie in [0,1)");
    if (!(epsilon > 0.0)) throw ConfigError("adam epsilon must be positive");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
    if (!(clip_norm >= 0.0)) throw ConfigError("clip_norm must be non-negative");
    if (!(lr_decay >= 0.0)) throw ConfigError("lr_decay must be non-negative");
}

AdamHyper gan_adam_defaults() { return AdamHyper{1e-4, 0.5, 0.999, 1e-8}; }
AdamHyper classifier_adam_defaults() { return AdamHyper{1e-3, 0.9, 0.999, 1e-8}; }

AdamState AdamState::zeros_for(const ParamBundle& params)
{
    return AdamState{0, zeros_like(params), zeros_like(params)};
}

void adam_step(AdamState& state, ParamBundle& params, const ParamBundle& grads, const AdamHyper& hyper)
{
    require_same_shape(params, grads);
    require_same_shape(params, state.first_moment);
    require_same_shape(params, state.second_moment);
    for (std::size_t i = 0; i < grads.weights.size(); ++i) {
        if (!grads.weights[i].allFinite() || !grads.biases[i].allFinite())
            throw TrainingError("non-finite gradient in layer " + std::to_string(i));
    }

    const ParamBundle* g_eff = &grads;
    ParamBundle adjusted;
    if (hyper.weight_decay > 0.0 || hyper.clip_norm > 0.0) {
        adjusted = grads;
        if (hyper.weight_decay > 0.0) {
            ParamBundle decay = params;
            decay *= hyper.weight_decay;
            adjusted += decay;
        }
        if (hyper.clip_norm > 0.0) {
            double sq = 0.0;
            for (std::size_t i = 0; i < adjusted.weights.size(); ++i)
                sq += adjusted.weights[i].squaredNorm() + adjusted.biases[i].squaredNorm();
            const double norm = std::sqrt(sq);
            if (norm > hyper.clip_norm) adjusted *= hyper.clip_norm / norm;
        }
        g_eff = &adjusted;
    }

    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double c1 = 1.0 - std::pow(hyper.beta1, t);
    const double c2 = 1.0 - std::pow(hyper.beta2, t);
    const double b1 = hyper.beta1;
    const double b2 = hyper.beta2;
    const double lr = hyper.learning_rate / (1.0 + hyper.lr_decay * (t - 1.0));
    const double eps = hyper.epsilon;

    auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
        p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    };
    for (std::size_t i = 0; i < params.weights.size(); ++i) {
        update(params.weights[i], state.first_moment.weights[i], state.second_moment.weights[i],
               g_eff->weights[i]);
        update(params.biases[i], state.first_moment.biases[i], state.second_moment.biases[i],
               g_eff->biases[i]);
    }
}

double finite_diff_gradcheck(const MultiLoss& loss_fn, std::vector<ParamBundle> params,
                             std::span<const ParamBundle> analytic, double step)
{
    if (params.size() != analytic.size()) throw ShapeError("analytic gradient bundle count mismatch");
    for (std::size_t b = 0; b < params.size(); ++b) require_same_shape(params[b], analytic[b]);
    if (!(step > 0.0)) throw InputError("finite-difference step must be positive");

    auto eval = [&]() {
        const double v = loss_fn(std::span<const ParamBundle>(params));
        if (!std::isfinite(v)) throw InputError("loss is not finite near the evaluation point");
        return v;
    };
    eval();

    double worst = 0.0;
    for (std::size_t b = 0; b < params.size(); ++b) {
        const std::size_t count = params[b].parameter_count();
        for (std::size_t k = 0; k < count; ++k) {
            double& theta = params[b].at(k);
            const double saved = theta;
            theta = saved + step;
            const double up = eval();
            theta = saved - step;
            const double down = eval();
            theta = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double exact = analytic[b].at(k);
            const double denom = std::max({std::abs(exact), std::abs(numeric), kGradcheckFloor});
            worst = std::max(worst, std::abs(exact - numeric) / denom);
        }
    }
    return worst;
}

double finite_diff_gradcheck(const std::function<double(const ParamBundle&)>& loss_fn,
                             const ParamBundle& params, const ParamBundle& analytic, double step)
{
    MultiLoss wrapped = [&loss_fn](std::span<const ParamBundle> p) { return loss_fn(p[0]); };
    std::vector<ParamBundle> ps{params};
    return finite_diff_gradcheck(wrapped, std::move(ps), std::span<const ParamBundle>(&analytic, 1), step);
}

} // namespace fsdml
