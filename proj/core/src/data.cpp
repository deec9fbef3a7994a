#include "fsdml/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fsdml/errors.hpp"
#include "fsdml/rng.hpp"

namespace fsdml {

std::string to_string(Domain d)
{
    switch (d) {
    case Domain::real_aerial: return "real_aerial";
    case Domain::real_ground: return "real_ground";
    case Domain::game_aerial: return "game_aerial";
    case Domain::generated_aerial: return "generated_aerial";
    }
    return "real_aerial";
}

Domain domain_from_string(const std::string& name)
{
    if (name == "real_aerial") return Domain::real_aerial;
    if (name == "real_ground") return Domain::real_ground;
    if (name == "game_aerial") return Domain::game_aerial;
    if (name == "generated_aerial") return Domain::generated_aerial;
    throw DatasetError("unknown domain '" + name + "'");
}

namespace {

std::vector<std::string> sorted_labels(const std::vector<FeatureRecord>& records)
{
    std::set<std::string> labels;
    for (const auto& r : records) labels.insert(r.label);
    return {labels.begin(), labels.end()};
}

} // namespace

Dataset::Dataset(std::vector<FeatureRecord> records)
    : Dataset(records, sorted_labels(records))
{
}

Dataset::Dataset(std::vector<FeatureRecord> records, std::vector<std::string> label_space)
    : records_(std::move(records)), label_space_(std::move(label_space))
{
    std::set<std::string> unique(label_space_.begin(), label_space_.end());
    if (unique.size() != label_space_.size()) throw DatasetError("label space contains duplicates");
    if (!records_.empty()) dim_ = static_cast<int>(records_.front().features.size());
    for (const auto& r : records_) {
        if (static_cast<int>(r.features.size()) != dim_)
            throw DatasetError("record '" + r.id + "' has dimension " + std::to_string(r.features.size()) +
                               ", expected " + std::to_string(dim_));
        if (dim_ == 0) throw DatasetError("record '" + r.id + "' has no features");
        for (double v : r.features)
            if (!std::isfinite(v)) throw DatasetError("record '" + r.id + "' has a non-finite feature");
        if (!unique.contains(r.label))
            throw DatasetError("record '" + r.id + "' label '" + r.label + "' is outside the label space");
    }
}

int Dataset::class_index(const std::string& label) const
{
    const auto it = std::find(label_space_.begin(), label_space_.end(), label);
    if (it == label_space_.end()) throw DatasetError("label '" + label + "' is outside the label space");
    return static_cast<int>(it - label_space_.begin());
}

std::vector<int> Dataset::class_indices() const
{
    std::vector<int> out;
    out.reserve(records_.size());
    for (const auto& r : records_) out.push_back(class_index(r.label));
    return out;
}

std::vector<std::size_t> Dataset::class_counts() const
{
    std::vector<std::size_t> counts(label_space_.size(), 0);
    for (int c : class_indices()) counts[static_cast<std::size_t>(c)] += 1;
    return counts;
}

Matrix Dataset::feature_matrix() const
{
    Matrix m(static_cast<Eigen::Index>(records_.size()), dim_);
    for (std::size_t i = 0; i < records_.size(); ++i)
        for (int j = 0; j < dim_; ++j) m(static_cast<Eigen::Index>(i), j) = records_[i].features[static_cast<std::size_t>(j)];
    return m;
}

Matrix Dataset::feature_matrix(std::span<const std::size_t> rows) const
{
    Matrix m(static_cast<Eigen::Index>(rows.size()), dim_);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& f = records_.at(rows[i]).features;
        for (int j = 0; j < dim_; ++j) m(static_cast<Eigen::Index>(i), j) = f[static_cast<std::size_t>(j)];
    }
    return m;
}

bool Dataset::has_domain(Domain d) const
{
    return std::all_of(records_.begin(), records_.end(), [d](const auto& r) { return r.domain == d; });
}

Dataset concat(const std::vector<Dataset>& parts)
{
    if (parts.empty()) return {};
    std::vector<FeatureRecord> all;
    for (const auto& p : parts) {
        if (p.label_space() != parts.front().label_space())
            throw DatasetError("cannot concatenate datasets with different label spaces");
        all.insert(all.end(), p.records().begin(), p.records().end());
    }
    return Dataset(std::move(all), parts.front().label_space());
}

Dataset relabel(const Dataset& data, std::span<const int> labels)
{
    if (labels.size() != data.size()) throw ShapeError("relabel: label count mismatch");
    std::vector<FeatureRecord> out = data.records();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const int c = labels[i];
        if (c < 0 || c >= data.num_classes()) throw InputError("relabel: class index out of range");
        out[i].label = data.label_space()[static_cast<std::size_t>(c)];
    }
    return Dataset(std::move(out), data.label_space());
}

Dataset parse_dataset(const std::string& text)
{
    std::vector<FeatureRecord> records;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            FeatureRecord r;
            r.id = j.at("id").get<std::string>();
            r.label = j.at("label").get<std::string>();
            r.domain = domain_from_string(j.at("domain").get<std::string>());
            r.features = j.at("features").get<std::vector<double>>();
            records.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        } catch (const DatasetError& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return Dataset(std::move(records));
}

std::string format_dataset(const Dataset& data)
{
    std::string out;
    for (const auto& r : data.records()) {
        nlohmann::ordered_json j;
        j["id"] = r.id;
        j["label"] = r.label;
        j["domain"] = to_string(r.domain);
        j["features"] = r.features;
        out += j.dump();
        out += '\n';
    }
    return out;
}

Dataset load_dataset(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open dataset file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_dataset(buf.str());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void save_dataset(const Dataset& data, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write dataset file " + path.string());
    out << format_dataset(data);
    if (!out) throw InputError("failed writing dataset file " + path.string());
}

void SplitSpec::validate() const
{
    if (!(train_frac > 0.0 && val_frac > 0.0 && test_frac > 0.0))
        throw ConfigError("split fractions must be positive");
    if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
        throw ConfigError("split fractions must sum to 1");
}

namespace {

std::vector<std::vector<std::size_t>> rows_by_class(const Dataset& data)
{
    std::vector<std::vector<std::size_t>> rows(static_cast<std::size_t>(data.num_classes()));
    const auto idx = data.class_indices();
    for (std::size_t i = 0; i < idx.size(); ++i) rows[static_cast<std::size_t>(idx[i])].push_back(i);
    return rows;
}

Dataset subset(const Dataset& data, const std::vector<bool>& keep)
{
    std::vector<FeatureRecord> out;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (keep[i]) out.push_back(data.records()[i]);
    return Dataset(std::move(out), data.label_space());
}

std::size_t floor_count(std::size_t n, double frac)
{
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * frac + 1e-9));
}

} // namespace

Split split(const Dataset& data, const SplitSpec& spec)
{
    spec.validate();
    const auto by_class = rows_by_class(data);
    std::vector<int> part(data.size(), 2);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto rows = by_class[c];
        if (rows.size() < 3)
            throw DatasetError("class '" + data.label_space()[c] + "' has " + std::to_string(rows.size()) +
                               " records; split needs at least 3");
        Rng rng = make_rng(spec.seed, "split", c);
        std::shuffle(rows.begin(), rows.end(), rng);
        const std::size_t n_train = floor_count(rows.size(), spec.train_frac);
        const std::size_t n_val = floor_count(rows.size(), spec.val_frac);
        for (std::size_t i = 0; i < rows.size(); ++i)
            part[rows[i]] = i < n_train ? 0 : (i < n_train + n_val ? 1 : 2);
    }
    std::vector<bool> tr(data.size()), va(data.size()), te(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        tr[i] = part[i] == 0;
        va[i] = part[i] == 1;
        te[i] = part[i] == 2;
    }
    return Split{subset(data, tr), subset(data, va), subset(data, te)};
}

Dataset kshot_sample(const Dataset& train, int k, std::uint64_t seed)
{
    if (k < 1) throw InputError("k must be at least 1");
    const auto by_class = rows_by_class(train);
    std::vector<bool> keep(train.size(), false);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto rows = by_class[c];
        if (rows.size() < static_cast<std::size_t>(k))
            throw DatasetError("class '" + train.label_space()[c] + "' has " + std::to_string(rows.size()) +
                               " records, fewer than k=" + std::to_string(k));
        Rng rng = make_rng(seed, "kshot", c);
        std::shuffle(rows.begin(), rows.end(), rng);
        for (int i = 0; i < k; ++i) keep[rows[static_cast<std::size_t>(i)]] = true;
    }
    return subset(train, keep);
}

Standardizer Standardizer::fit(const std::vector<Dataset>& reference)
{
    std::vector<const Dataset*> nonempty;
    for (const auto& d : reference)
        if (!d.empty()) nonempty.push_back(&d);
    if (nonempty.empty()) throw InputError("standardizer needs at least one record");
    const int dim = nonempty.front()->dim();
    Vector sum = Vector::Zero(dim);
    Vector sq = Vector::Zero(dim);
    double n = 0.0;
    for (const auto* d : nonempty) {
        if (d->dim() != dim) throw ShapeError("standardizer reference sets differ in dimension");
        const Matrix m = d->feature_matrix();
        sum += m.colwise().sum().transpose();
        sq += m.array().square().matrix().colwise().sum().transpose();
        n += static_cast<double>(m.rows());
    }
    Standardizer s;
    s.mean = sum / n;
    const Vector var = (sq / n - s.mean.cwiseProduct(s.mean)).cwiseMax(0.0);
    s.scale = var.cwiseSqrt().unaryExpr([](double v) { return v > 1e-12 ? v : 1.0; });
    return s;
}

Dataset Standardizer::apply(const Dataset& data) const
{
    if (!data.empty() && data.dim() != mean.size()) throw ShapeError("standardizer dimension mismatch");
    std::vector<FeatureRecord> out = data.records();
    for (auto& r : out)
        for (std::size_t j = 0; j < r.features.size(); ++j)
            r.features[j] = (r.features[j] - mean[static_cast<Eigen::Index>(j)]) / scale[static_cast<Eigen::Index>(j)];
    return Dataset(std::move(out), data.label_space());
}

} // namespace fsdml
