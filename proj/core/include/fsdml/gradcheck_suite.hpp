#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fsdml {

inline constexpr double kGradcheckTolerance = 1e-4;

struct GradcheckCase {
    std::string name;
    double max_rel_error = 0.0;
    std::size_t parameters = 0;
    bool side_conditions = true; ///< e.g. networks that must stay untouched did
    std::string note;

    bool passed() const { return side_conditions && max_rel_error < kGradcheckTolerance; }
};

/// Finite-difference checks of every training loss on tiny networks (widths
/// <= 16, batches <= 8): cross-entropy, the critic loss with its gradient
/// penalty (both real-term variants), the penalty alone, the generator loss,
/// and the multitask composite with hard and soft pseudo-labels.
std::vector<GradcheckCase> run_gradcheck_suite(std::uint64_t seed = 2024);

std::string format_gradcheck_table(const std::vector<GradcheckCase>& cases);

} // namespace fsdml
