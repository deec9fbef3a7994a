#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fsdml/nn.hpp"
#include "fsdml/optim.hpp"

namespace fsdml {

inline constexpr int kCheckpointVersion = 1;

struct NetCheckpoint {
    std::string name;
    ParamBundle params;
    std::optional<AdamState> adam;

    bool operator==(const NetCheckpoint& other) const;
};

/// A versioned, self-describing snapshot of one or more named networks.
/// Weights are stored row-major; doubles are written in shortest round-trip
/// form so a load of a save is bit-exact.
struct Checkpoint {
    int version = kCheckpointVersion;
    std::string created;  ///< producing command, never a timestamp (outputs stay byte-reproducible)
    std::string kind;     ///< "dml", "gan", ...
    std::uint64_t seed = 0;
    std::string config_hash;
    std::map<std::string, std::string> metadata;
    std::vector<NetCheckpoint> nets;

    /// Throws InputError if absent.
    const NetCheckpoint& net(const std::string& name) const;
    bool has_net(const std::string& name) const;

    bool operator==(const Checkpoint&) const = default;
};

std::string format_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& text);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace fsdml
