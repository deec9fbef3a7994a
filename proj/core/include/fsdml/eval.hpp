#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fsdml/data.hpp"
#include "fsdml/dml.hpp"

namespace fsdml {

/// Accuracy summary over a labelled test set. confusion[i][j] counts records
/// of true class i predicted as class j.
struct EvalReport {
    std::vector<std::string> labels;
    double overall_accuracy = 0.0;
    std::vector<double> per_class_accuracy; ///< NaN for classes without test records
    std::vector<std::vector<std::int64_t>> confusion;
    std::vector<std::uint64_t> seeds;
    std::string mode;
    std::string config_hash;

    std::int64_t total() const;
    std::int64_t row_sum(std::size_t i) const;
    /// Rows scaled to sum to 1 (zero rows stay zero).
    std::vector<std::vector<double>> row_normalized() const;
};

EvalReport evaluate_predictions(const std::vector<std::string>& labels, std::span<const int> truth,
                                std::span<const int> predicted);

/// Classifies `test` with head 1 of `net` (heads 1+2 when `ensemble`).
EvalReport evaluate(const DmlNet& net, const Dataset& test, bool ensemble = false);

/// Mean accuracies, summed confusion. Throws InputError on an empty list and
/// ConfigError when label spaces or modes disagree.
EvalReport average_reports(std::span<const EvalReport> reports);

/// Returns an empty string when the report satisfies its invariants,
/// otherwise a description of the first violation.
std::string check_report_invariants(const EvalReport& report);

/// One row per class plus an "overall" row.
std::string format_report_csv(const EvalReport& report);
/// Human-readable summary with a row-normalised confusion matrix (percent).
std::string format_report_text(const EvalReport& report);

struct KShotPoint {
    int k = 0;
    double mean = 0.0;
    double std = 0.0; ///< sample standard deviation over seeds (0 for one seed)
};

struct KShotCurve {
    std::string mode;
    std::vector<KShotPoint> points; ///< strictly increasing k
};

std::string format_curve_csv(const KShotCurve& curve);
/// Whitespace-separated blocks, one per mode, separated by blank lines.
std::string format_curves_gnuplot(std::span<const KShotCurve> curves);

/// Mean and sample standard deviation.
std::pair<double, double> mean_std(std::span<const double> values);

} // namespace fsdml
