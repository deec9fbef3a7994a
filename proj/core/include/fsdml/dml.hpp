#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fsdml/data.hpp"
#include "fsdml/nn.hpp"
#include "fsdml/optim.hpp"

namespace fsdml {

/// Branches of the disjoint multitask network, named by (label space, input
/// source). Numbering follows the usual figure: 1 real-on-real, 2 real-on-aux,
/// 3 aux-on-real, 4 aux-on-aux.
enum class Head : int { real_on_real = 0, real_on_aux = 1, aux_on_real = 2, aux_on_aux = 3 };

inline constexpr int kNumHeads = 4;
inline constexpr int index_of(Head h) { return static_cast<int>(h); }

enum class DmlMode { baseline, games, generated, games_plus_generated };

std::string to_string(DmlMode mode);
DmlMode dml_mode_from_string(const std::string& name);

struct BranchWeights {
    std::array<double, kNumHeads> w{1.0, 1.0, 1.0, 1.0};

    double operator[](Head h) const { return w[static_cast<std::size_t>(index_of(h))]; }
    void validate() const;
};

struct DmlConfig {
    std::vector<int> trunk_hidden{512, 256};
    Activation trunk_activation = Activation::relu;
    AdamHyper adam = classifier_adam_defaults();
    int epochs = 200;
    int batch_size = 32;
    BranchWeights weights;
    double generated_branch_weight = 0.5; ///< multiplies w2 and w4 while fine-tuning on generated data
    bool soft_labels = false;             ///< teacher distributions instead of argmax labels
    bool ensemble_heads = false;          ///< classify with the mean of heads 1 and 2
    bool finetune_with_games = false;     ///< keep feeding game batches during the warm-started fine-tune

    void validate() const;
};

/// Shared two-layer trunk feeding four single-layer softmax heads.
struct DmlNet {
    ParamBundle trunk;
    std::array<ParamBundle, kNumHeads> heads;

    const ParamBundle& head(Head h) const { return heads[static_cast<std::size_t>(index_of(h))]; }
    ParamBundle& head(Head h) { return heads[static_cast<std::size_t>(index_of(h))]; }
    int input_dim() const { return trunk.input_dim(); }
    int real_classes() const { return head(Head::real_on_real).output_dim(); }
    int aux_classes() const { return head(Head::aux_on_aux).output_dim(); }

    bool operator==(const DmlNet&) const = default;
};

struct DmlAdam {
    AdamState trunk;
    std::array<AdamState, kNumHeads> heads;

    static DmlAdam zeros_for(const DmlNet& net);
};

/// Trunk and every head initialised from independent streams derived from
/// `seed`, so the trunk and head 1 do not depend on the auxiliary class count.
DmlNet build_dml(int input_dim, int real_classes, int aux_classes, std::uint64_t seed,
                 const DmlConfig& config = {});

struct PseudoLabelBatch {
    Head source = Head::real_on_real;
    std::vector<int> hard_labels;
    Matrix probabilities; ///< teacher distribution (rows), used in soft-label mode
};

/// Argmax of a teacher head (1 or 4), lowest index on ties. The teacher's
/// parameters are read, never differentiated.
PseudoLabelBatch pseudo_labels(const DmlNet& net, Head teacher, const Matrix& batch);

struct LabeledBatch {
    Matrix features;
    std::vector<int> labels;
};

struct DmlGrads {
    ParamBundle trunk;
    std::array<ParamBundle, kNumHeads> heads;
};

struct DmlLoss {
    double total = 0.0;
    std::array<double, kNumHeads> branch{}; ///< unweighted mean cross-entropy per branch
    DmlGrads grads;
};

/// Weighted composite loss for fixed (pseudo-)labels:
///   w1 L(y_r, P1(r)) + w3 L(yhat_aux, P3(r)) + w2 L(yhat_real, P2(a)) + w4 L(y_a, P4(a)).
/// Empty batches and zero-weight branches contribute nothing.
DmlLoss dml_loss(const DmlNet& net, const LabeledBatch& real, const LabeledBatch& aux, const BranchWeights& weights,
                 const PseudoLabelBatch& aux_labels_for_real, const PseudoLabelBatch& real_labels_for_aux,
                 bool soft_labels = false);

struct DmlStepReport {
    double total = 0.0;
    std::array<double, kNumHeads> branch{};
    PseudoLabelBatch aux_labels_for_real; ///< head 4 on the real batch, captured before the update
    PseudoLabelBatch real_labels_for_aux; ///< head 1 on the aux batch, captured before the update
};

/// One optimisation step on a real batch and an aux batch: capture
/// pseudo-labels from the current teachers, evaluate the composite loss, apply
/// one Adam update to trunk and heads.
DmlStepReport dml_step(DmlNet& net, DmlAdam& adam, const LabeledBatch& real, const LabeledBatch& aux,
                       const BranchWeights& weights, const DmlConfig& config);

struct Classification {
    std::vector<int> labels;
    Matrix probabilities;
};

/// Predictions of head 1 (or the mean of heads 1 and 2 when `ensemble`).
Classification classify(const DmlNet& net, const Matrix& features, bool ensemble = false);

/// Copies the trunk and head 1 from `source`; heads 2-4 of `target` are kept
/// as initialised.
DmlNet warm_start(const DmlNet& target, const DmlNet& source);

struct DmlEpochLog {
    int epoch = 0;
    std::array<double, kNumHeads> branch{};
    double total = 0.0;
    double val_accuracy = 0.0;

    bool operator==(const DmlEpochLog&) const = default;
};

struct DmlTrainResult {
    DmlNet net;                     ///< validation-selected weights
    DmlAdam adam;
    std::vector<DmlEpochLog> log;
    int best_epoch = -1;
    double best_val_accuracy = 0.0;
    DmlNet final_net;               ///< weights after the last epoch
    std::optional<DmlNet> games_stage; ///< the games-mode network a combined run started from
    std::vector<DmlEpochLog> games_stage_log;
};

struct DmlInputs {
    Dataset real;                      ///< k-shot real aerial
    Dataset val;                       ///< real aerial validation split
    std::optional<Dataset> games;
    std::optional<Dataset> generated;
    std::optional<DmlNet> warm_source; ///< games-mode network for the combined mode
};

DmlTrainResult train_dml(DmlMode mode, const DmlInputs& inputs, const DmlConfig& config, std::uint64_t seed);

double accuracy(const DmlNet& net, const Dataset& data, bool ensemble = false);

std::string format_dml_log(const std::vector<DmlEpochLog>& log);

} // namespace fsdml
