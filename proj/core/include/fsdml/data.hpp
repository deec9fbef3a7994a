#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "fsdml/nn.hpp"

namespace fsdml {

enum class Domain { real_aerial, real_ground, game_aerial, generated_aerial };

std::string to_string(Domain d);
Domain domain_from_string(const std::string& name);

struct FeatureRecord {
    std::string id;
    std::string label;
    Domain domain = Domain::real_aerial;
    std::vector<double> features;

    bool operator==(const FeatureRecord&) const = default;
};

/// An immutable collection of records sharing one feature dimension. The
/// label space is either given explicitly or derived as the sorted set of
/// record labels; class indices used throughout the library refer to it.
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(std::vector<FeatureRecord> records);
    Dataset(std::vector<FeatureRecord> records, std::vector<std::string> label_space);

    const std::vector<FeatureRecord>& records() const { return records_; }
    const std::vector<std::string>& label_space() const { return label_space_; }
    int dim() const { return dim_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    int num_classes() const { return static_cast<int>(label_space_.size()); }

    /// Throws DatasetError for labels outside the label space.
    int class_index(const std::string& label) const;
    std::vector<int> class_indices() const;
    std::vector<std::size_t> class_counts() const;

    /// n x dim matrix, one record per row.
    Matrix feature_matrix() const;
    Matrix feature_matrix(std::span<const std::size_t> rows) const;

    /// True when every record carries domain d (vacuously true when empty).
    bool has_domain(Domain d) const;

    bool operator==(const Dataset&) const = default;

private:
    std::vector<FeatureRecord> records_;
    std::vector<std::string> label_space_;
    int dim_ = 0;
};

/// Concatenate datasets that share a label space and dimension.
Dataset concat(const std::vector<Dataset>& parts);

/// Replace each record's label with labels[i] (same label space).
Dataset relabel(const Dataset& data, std::span<const int> labels);

// Line-delimited JSON: {"id":..,"label":..,"domain":..,"features":[..]}.
Dataset parse_dataset(const std::string& text);
std::string format_dataset(const Dataset& data);
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& data, const std::filesystem::path& path);

struct SplitSpec {
    double train_frac = 0.6;
    double val_frac = 0.1;
    double test_frac = 0.3;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Split {
    Dataset train;
    Dataset val;
    Dataset test;
};

/// Per-class stratified partition: floor(n*train) / floor(n*val) / remainder.
Split split(const Dataset& data, const SplitSpec& spec);

/// Exactly k records per class, uniformly without replacement.
Dataset kshot_sample(const Dataset& train, int k, std::uint64_t seed);

/// Per-dimension z-scoring fitted on a reference set.
struct Standardizer {
    Vector mean;
    Vector scale;

    static Standardizer fit(const std::vector<Dataset>& reference);
    Dataset apply(const Dataset& data) const;
};

} // namespace fsdml
