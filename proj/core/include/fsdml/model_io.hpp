#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fsdml/checkpoint.hpp"
#include "fsdml/dml.hpp"
#include "fsdml/gan.hpp"

namespace fsdml {

/// Provenance stamped on every checkpoint a command writes.
struct CheckpointStamp {
    std::string created;
    std::uint64_t seed = 0;
    std::string config_hash;
};

/// Nets "trunk", "head1".."head4"; label spaces and the trunk activation go
/// into metadata.
Checkpoint dml_checkpoint(const DmlNet& net, const DmlAdam* adam, const std::vector<std::string>& real_labels,
                          const std::vector<std::string>& aux_labels, DmlMode mode, const CheckpointStamp& stamp);

struct LoadedDml {
    DmlNet net;
    std::optional<DmlAdam> adam;
    std::vector<std::string> real_labels;
    std::vector<std::string> aux_labels;
    DmlMode mode = DmlMode::baseline;
};

/// Throws ParseError when the checkpoint is not a DML checkpoint or its nets
/// do not fit together.
LoadedDml dml_from_checkpoint(const Checkpoint& ckpt);

/// Nets "generator", "critic" (with optimizer state) and "classifier".
Checkpoint gan_checkpoint(const GanModel& model, const ParamBundle& classifier, const std::vector<std::string>& labels,
                          const CheckpointStamp& stamp);

struct LoadedGan {
    GanModel model;
    ParamBundle classifier;
    std::vector<std::string> labels;
};

LoadedGan gan_from_checkpoint(const Checkpoint& ckpt);

} // namespace fsdml
