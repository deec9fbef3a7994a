#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "fsdml/data.hpp"
#include "fsdml/nn.hpp"
#include "fsdml/rng.hpp"

namespace testutil {

using fsdml::Matrix;
using fsdml::ParamBundle;
using fsdml::Vector;

inline Matrix gaussian(std::uint64_t seed, int rows, int cols, double mean = 0.0, double sd = 1.0)
{
    fsdml::Rng rng(seed);
    std::normal_distribution<double> nd(mean, sd);
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = nd(rng);
    return m;
}

// Independent central-difference oracle, written against the flat accessor
// only so it shares no code with the library's gradient checker.
inline std::vector<double> numeric_gradient(const std::function<double(const ParamBundle&)>& f, ParamBundle p,
                                            double h = 1e-5)
{
    std::vector<double> g(p.parameter_count());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double keep = p.at(i);
        p.at(i) = keep + h;
        const double up = f(p);
        p.at(i) = keep - h;
        const double down = f(p);
        p.at(i) = keep;
        g[i] = (up - down) / (2 * h);
    }
    return g;
}

inline double max_rel_error(const ParamBundle& analytic, const std::vector<double>& numeric)
{
    double worst = 0.0;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
        const double a = analytic.at(i);
        const double n = numeric[i];
        worst = std::max(worst, std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6}));
    }
    return worst;
}

/// Balanced labelled clusters: class c centred at `spacing * c` in every
/// coordinate (shifted by `offset`), isotropic spread `sd`, clipped at zero.
inline fsdml::Dataset clusters(int classes, int per_class, int dim, fsdml::Domain domain, std::uint64_t seed,
                               double spacing = 3.0, double sd = 0.3, double offset = 1.0,
                               const std::string& prefix = "r")
{
    fsdml::Rng rng(seed);
    std::normal_distribution<double> nd(0.0, sd);
    std::vector<fsdml::FeatureRecord> recs;
    for (int c = 0; c < classes; ++c)
        for (int i = 0; i < per_class; ++i) {
            fsdml::FeatureRecord r{prefix + std::to_string(c) + "-" + std::to_string(i), "c" + std::to_string(c),
                                   domain, std::vector<double>(static_cast<std::size_t>(dim))};
            for (int j = 0; j < dim; ++j) {
                const double centre = offset + spacing * ((j % classes) == c ? 1.0 : 0.0);
                r.features[static_cast<std::size_t>(j)] = std::max(0.0, centre + nd(rng));
            }
            recs.push_back(std::move(r));
        }
    return fsdml::Dataset(std::move(recs));
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("fsdml-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace testutil
