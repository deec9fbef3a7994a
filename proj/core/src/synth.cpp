#include "fsdml/synth.hpp"

#include <cmath>
#include <cstdio>

#include "fsdml/errors.hpp"
#include "fsdml/rng.hpp"

namespace fsdml {

void SynthBenchConfig::validate() const
{
    if (num_classes < 2) throw ConfigError("synth: num_classes must be at least 2");
    if (dim < 2) throw ConfigError("synth: dim must be at least 2");
    if (ground_per_class < 0 || aerial_per_class < 0 || game_per_class < 0)
        throw ConfigError("synth: per-class counts must be non-negative");
    if (game_classes < 0) throw ConfigError("synth: game_classes must be non-negative");
    if (game_overlap < 0 || game_overlap > std::min(num_classes, game_classes))
        throw ConfigError("synth: game_overlap must lie in [0, min(num_classes, game_classes)]");
    if (nuisance_rank < 0 || nuisance_rank > dim) throw ConfigError("synth: nuisance_rank must lie in [0, dim]");
    for (double v : {class_separation, cluster_spread, nuisance_scale, map_strength, aerial_shift,
                     aerial_noise, game_offset})
        if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("synth: scales must be finite and non-negative");
}

std::string real_label(int c)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "action_%02d", c);
    return buf;
}

std::string game_label(int c)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "game_%02d", c);
    return buf;
}

namespace {

Vector gaussian_vector(Rng& rng, int n, double scale)
{
    std::normal_distribution<double> nd(0.0, 1.0);
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = scale * nd(rng);
    return v;
}

Matrix gaussian_matrix(Rng& rng, int rows, int cols, double scale)
{
    std::normal_distribution<double> nd(0.0, 1.0);
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = scale * nd(rng);
    return m;
}

FeatureRecord make_record(std::string id, std::string label, Domain domain, const Vector& x)
{
    FeatureRecord r{std::move(id), std::move(label), domain, std::vector<double>(static_cast<std::size_t>(x.size()))};
    for (Eigen::Index i = 0; i < x.size(); ++i) r.features[static_cast<std::size_t>(i)] = std::max(0.0, x[i]);
    return r;
}

} // namespace

SynthBench synth_benchmark(const SynthBenchConfig& cfg)
{
    cfg.validate();
    const int d = cfg.dim;

    // Fixed structure: class centres (relative to base level), nuisance
    // basis, domain map, shift and game bias.
    Rng structure = make_rng(cfg.seed, "synth-structure");
    std::vector<Vector> centres;
    for (int c = 0; c < cfg.num_classes; ++c) centres.push_back(gaussian_vector(structure, d, cfg.class_separation));
    const Matrix nuisance = cfg.nuisance_rank > 0
                                ? gaussian_matrix(structure, d, cfg.nuisance_rank, 1.0 / std::sqrt(static_cast<double>(d)))
                                : Matrix::Zero(d, 0);
    const Matrix map = Matrix::Identity(d, d) +
                       gaussian_matrix(structure, d, d, cfg.map_strength / std::sqrt(static_cast<double>(d)));
    const Vector shift = gaussian_vector(structure, d, cfg.aerial_shift);
    const Vector game_bias = gaussian_vector(structure, d, cfg.game_offset);
    std::vector<Vector> game_centres; // in aerial space, relative to base level
    for (int g = 0; g < cfg.game_classes; ++g) {
        if (g < cfg.game_overlap)
            game_centres.push_back(map * centres[static_cast<std::size_t>(g)] + shift + game_bias);
        else
            game_centres.push_back(gaussian_vector(structure, d, cfg.class_separation));
    }
    const Vector base = Vector::Constant(d, cfg.base_level);

    // Within-class variation in ground coordinates.
    auto latent = [&](Rng& rng) {
        Vector v = gaussian_vector(rng, d, cfg.cluster_spread);
        if (cfg.nuisance_rank > 0) v += nuisance * gaussian_vector(rng, cfg.nuisance_rank, cfg.nuisance_scale);
        return v;
    };

    std::vector<std::string> real_labels;
    for (int c = 0; c < cfg.num_classes; ++c) real_labels.push_back(real_label(c));
    std::vector<std::string> game_labels;
    for (int g = 0; g < cfg.game_classes; ++g) game_labels.push_back(game_label(g));

    std::vector<FeatureRecord> ground, aerial, game;
    for (int c = 0; c < cfg.num_classes; ++c) {
        const auto& mu = centres[static_cast<std::size_t>(c)];
        Rng rg = make_rng(cfg.seed, "synth-ground", static_cast<std::uint64_t>(c));
        for (int i = 0; i < cfg.ground_per_class; ++i)
            ground.push_back(make_record("ground-" + std::to_string(c) + "-" + std::to_string(i), real_label(c),
                                         Domain::real_ground, base + mu + latent(rg)));
        Rng ra = make_rng(cfg.seed, "synth-aerial", static_cast<std::uint64_t>(c));
        for (int i = 0; i < cfg.aerial_per_class; ++i) {
            const Vector x = base + map * (mu + latent(ra)) + shift + gaussian_vector(ra, d, cfg.aerial_noise);
            aerial.push_back(make_record("aerial-" + std::to_string(c) + "-" + std::to_string(i), real_label(c),
                                         Domain::real_aerial, x));
        }
    }
    for (int g = 0; g < cfg.game_classes; ++g) {
        Rng rgame = make_rng(cfg.seed, "synth-game", static_cast<std::uint64_t>(g));
        for (int i = 0; i < cfg.game_per_class; ++i) {
            const Vector x = base + game_centres[static_cast<std::size_t>(g)] + map * latent(rgame) +
                             gaussian_vector(rgame, d, cfg.aerial_noise);
            game.push_back(make_record("game-" + std::to_string(g) + "-" + std::to_string(i), game_label(g),
                                       Domain::game_aerial, x));
        }
    }
    return SynthBench{Dataset(std::move(ground), real_labels), Dataset(std::move(aerial), real_labels),
                      Dataset(std::move(game), game_labels)};
}

} // namespace fsdml
