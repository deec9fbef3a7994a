#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fsdml/nn.hpp"

namespace fsdml {

struct AdamHyper {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    // Off unless set.
    double weight_decay = 0.0;   ///< L2 coefficient added to the gradient
    double clip_norm = 0.0;      ///< rescale a bundle's gradient to at most this L2 norm
    double lr_decay = 0.0;       ///< lr / (1 + lr_decay * (step - 1))

    void validate() const;
};

/// Conventional GAN settings (lr 1e-4, beta1 0.5).
AdamHyper gan_adam_defaults();
/// Classifier / multitask settings (lr 1e-3, beta1 0.9).
AdamHyper classifier_adam_defaults();

struct AdamState {
    std::int64_t step_count = 0;
    ParamBundle first_moment;
    ParamBundle second_moment;

    static AdamState zeros_for(const ParamBundle& params);
};

/// One bias-corrected Adam update, applied in place. Throws ShapeError on
/// mismatched shapes and TrainingError (naming the layer) on non-finite
/// gradients; neither argument is modified when it throws.
void adam_step(AdamState& state, ParamBundle& params, const ParamBundle& grads, const AdamHyper& hyper);

/// Maximum over parameters of |analytic - numeric| / max(|analytic|, |numeric|, floor),
/// with the numeric derivative from central differences.
inline constexpr double kGradcheckFloor = 1e-6;

using MultiLoss = std::function<double(std::span<const ParamBundle>)>;

double finite_diff_gradcheck(const MultiLoss& loss_fn, std::vector<ParamBundle> params,
                             std::span<const ParamBundle> analytic, double step = 1e-5);

double finite_diff_gradcheck(const std::function<double(const ParamBundle&)>& loss_fn,
                             const ParamBundle& params, const ParamBundle& analytic,
                             double step = 1e-5);

} // namespace fsdml
