#include "fsdml/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fsdml/errors.hpp"

namespace fsdml {

using nlohmann::ordered_json;

bool NetCheckpoint::operator==(const NetCheckpoint& other) const
{
    if (name != other.name || !(params == other.params)) return false;
    if (adam.has_value() != other.adam.has_value()) return false;
    if (!adam) return true;
    return adam->step_count == other.adam->step_count &&
           adam->first_moment == other.adam->first_moment &&
           adam->second_moment == other.adam->second_moment;
}

const NetCheckpoint& Checkpoint::net(const std::string& name) const
{
    for (const auto& n : nets)
        if (n.name == name) return n;
    throw InputError("checkpoint has no network named '" + name + "'");
}

bool Checkpoint::has_net(const std::string& name) const
{
    for (const auto& n : nets)
        if (n.name == name) return true;
    return false;
}

namespace {

ordered_json row_major(const Matrix& m)
{
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
    return flat;
}

ordered_json weights_json(const ParamBundle& p)
{
    ordered_json arr = ordered_json::array();
    for (const auto& w : p.weights) arr.push_back(row_major(w));
    return arr;
}

ordered_json biases_json(const ParamBundle& p)
{
    ordered_json arr = ordered_json::array();
    for (const auto& b : p.biases) arr.push_back(std::vector<double>(b.data(), b.data() + b.size()));
    return arr;
}

ordered_json moments_json(const ParamBundle& p)
{
    ordered_json j;
    j["weights"] = weights_json(p);
    j["biases"] = biases_json(p);
    return j;
}

ParamBundle read_bundle(const std::vector<LayerSpec>& specs, const ordered_json& weights,
                        const ordered_json& biases)
{
    validate_specs(specs);
    if (weights.size() != specs.size() || biases.size() != specs.size())
        throw ParseError("layer count does not match layer_specs");
    ParamBundle p;
    p.specs = specs;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto w = weights[i].get<std::vector<double>>();
        const auto b = biases[i].get<std::vector<double>>();
        const auto rows = static_cast<std::size_t>(specs[i].output_dim);
        const auto cols = static_cast<std::size_t>(specs[i].input_dim);
        if (w.size() != rows * cols || b.size() != rows)
            throw ParseError("layer " + std::to_string(i) + " has the wrong number of values");
        Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c)
                m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = w[r * cols + c];
        p.weights.push_back(std::move(m));
        p.biases.push_back(Eigen::Map<const Vector>(b.data(), static_cast<Eigen::Index>(b.size())));
    }
    return p;
}

} // namespace

std::string format_checkpoint(const Checkpoint& ckpt)
{
    ordered_json j;
    j["version"] = ckpt.version;
    j["created"] = ckpt.created;
    j["kind"] = ckpt.kind;
    j["seed"] = ckpt.seed;
    j["config_hash"] = ckpt.config_hash;
    j["metadata"] = ckpt.metadata;
    ordered_json nets = ordered_json::array();
    for (const auto& n : ckpt.nets) {
        ordered_json nj;
        nj["name"] = n.name;
        ordered_json specs = ordered_json::array();
        for (const auto& s : n.params.specs) {
            ordered_json sj;
            sj["input_dim"] = s.input_dim;
            sj["output_dim"] = s.output_dim;
            sj["activation"] = to_string(s.activation);
            sj["slope"] = s.slope;
            specs.push_back(sj);
        }
        nj["layer_specs"] = specs;
        nj["weights"] = weights_json(n.params);
        nj["biases"] = biases_json(n.params);
        if (n.adam) {
            nj["adam_m"] = moments_json(n.adam->first_moment);
            nj["adam_v"] = moments_json(n.adam->second_moment);
            nj["step_count"] = n.adam->step_count;
        } else {
            nj["adam_m"] = nullptr;
            nj["adam_v"] = nullptr;
            nj["step_count"] = 0;
        }
        nets.push_back(std::move(nj));
    }
    j["nets"] = std::move(nets);
    return j.dump() + "\n";
}

Checkpoint parse_checkpoint(const std::string& text)
{
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const ordered_json::exception& e) {
        throw ParseError(std::string("checkpoint is not valid JSON: ") + e.what());
    }
    try {
        Checkpoint c;
        c.version = j.at("version").get<int>();
        if (c.version != kCheckpointVersion)
            throw UnsupportedVersionError("unsupported checkpoint version " + std::to_string(c.version) +
                                          " (expected " + std::to_string(kCheckpointVersion) + ")");
        c.created = j.at("created").get<std::string>();
        c.kind = j.at("kind").get<std::string>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.config_hash = j.at("config_hash").get<std::string>();
        c.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
        for (const auto& nj : j.at("nets")) {
            NetCheckpoint n;
            n.name = nj.at("name").get<std::string>();
            std::vector<LayerSpec> specs;
            for (const auto& sj : nj.at("layer_specs")) {
                LayerSpec s;
                s.input_dim = sj.at("input_dim").get<int>();
                s.output_dim = sj.at("output_dim").get<int>();
                s.activation = activation_from_string(sj.at("activation").get<std::string>());
                s.slope = sj.at("slope").get<double>();
                specs.push_back(s);
            }
            n.params = read_bundle(specs, nj.at("weights"), nj.at("biases"));
            if (!nj.at("adam_m").is_null()) {
                AdamState st;
                st.step_count = nj.at("step_count").get<std::int64_t>();
                st.first_moment = read_bundle(specs, nj.at("adam_m").at("weights"), nj.at("adam_m").at("biases"));
                st.second_moment = read_bundle(specs, nj.at("adam_v").at("weights"), nj.at("adam_v").at("biases"));
                n.adam = std::move(st);
            }
            c.nets.push_back(std::move(n));
        }
        return c;
    } catch (const ordered_json::exception& e) {
        throw ParseError(std::string("malformed checkpoint: ") + e.what());
    } catch (const ConfigError& e) {
        throw ParseError(std::string("malformed checkpoint: ") + e.what());
    }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path)
{
    const std::string text = format_checkpoint(ckpt);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write checkpoint " + path.string());
    out << text;
    if (!out) throw InputError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open checkpoint " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_checkpoint(buf.str());
}

} // namespace fsdml
