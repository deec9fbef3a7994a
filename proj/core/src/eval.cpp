#include "fsdml/eval.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "fsdml/errors.hpp"

namespace fsdml {

std::int64_t EvalReport::total() const
{
    std::int64_t t = 0;
    for (std::size_t i = 0; i < confusion.size(); ++i) t += row_sum(i);
    return t;
}

std::int64_t EvalReport::row_sum(std::size_t i) const
{
    return std::accumulate(confusion.at(i).begin(), confusion.at(i).end(), std::int64_t{0});
}

std::vector<std::vector<double>> EvalReport::row_normalized() const
{
    std::vector<std::vector<double>> out(confusion.size());
    for (std::size_t i = 0; i < confusion.size(); ++i) {
        const double s = static_cast<double>(row_sum(i));
        out[i].resize(confusion[i].size(), 0.0);
        if (s > 0)
            for (std::size_t j = 0; j < confusion[i].size(); ++j) out[i][j] = static_cast<double>(confusion[i][j]) / s;
    }
    return out;
}

namespace {

void finalize(EvalReport& r)
{
    const std::size_t n = r.labels.size();
    r.per_class_accuracy.assign(n, std::numeric_limits<double>::quiet_NaN());
    std::int64_t diag = 0;
    for (std::size_t i = 0; i < n; ++i) {
        diag += r.confusion[i][i];
        const auto s = r.row_sum(i);
        if (s > 0) r.per_class_accuracy[i] = static_cast<double>(r.confusion[i][i]) / static_cast<double>(s);
    }
    const auto t = r.total();
    r.overall_accuracy = t > 0 ? static_cast<double>(diag) / static_cast<double>(t) : 0.0;
}

} // namespace

EvalReport evaluate_predictions(const std::vector<std::string>& labels, std::span<const int> truth,
                                std::span<const int> predicted)
{
    if (truth.size() != predicted.size()) throw ShapeError("truth and prediction counts differ");
    const auto n = static_cast<int>(labels.size());
    EvalReport r;
    r.labels = labels;
    r.confusion.assign(labels.size(), std::vector<std::int64_t>(labels.size(), 0));
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || truth[i] >= n || predicted[i] < 0 || predicted[i] >= n)
            throw InputError("class index outside the label space");
        r.confusion[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])] += 1;
    }
    finalize(r);
    return r;
}

EvalReport evaluate(const DmlNet& net, const Dataset& test, bool ensemble)
{
    if (test.num_classes() != net.real_classes())
        throw ConfigError("test label space has " + std::to_string(test.num_classes()) +
                          " classes but the network predicts " + std::to_string(net.real_classes()));
    if (!test.has_domain(Domain::real_aerial)) throw ConfigError("evaluation data must be real aerial records");
    const auto truth = test.class_indices();
    std::vector<int> pred;
    if (!test.empty()) pred = classify(net, test.feature_matrix(), ensemble).labels;
    return evaluate_predictions(test.label_space(), truth, pred);
}

EvalReport average_reports(std::span<const EvalReport> reports)
{
    if (reports.empty()) throw InputError("cannot average zero reports");
    const auto& first = reports.front();
    EvalReport out;
    out.labels = first.labels;
    out.mode = first.mode;
    out.config_hash = first.config_hash;
    out.confusion.assign(first.labels.size(), std::vector<std::int64_t>(first.labels.size(), 0));
    out.per_class_accuracy.assign(first.labels.size(), 0.0);
    std::vector<double> counted(first.labels.size(), 0.0);
    for (const auto& r : reports) {
        if (r.labels != first.labels) throw ConfigError("cannot average reports with different label spaces");
        if (r.mode != first.mode) throw ConfigError("cannot average reports from different modes");
        out.overall_accuracy += r.overall_accuracy;
        for (std::size_t i = 0; i < r.labels.size(); ++i) {
            for (std::size_t j = 0; j < r.labels.size(); ++j) out.confusion[i][j] += r.confusion[i][j];
            if (!std::isnan(r.per_class_accuracy[i])) {
                out.per_class_accuracy[i] += r.per_class_accuracy[i];
                counted[i] += 1.0;
            }
        }
        out.seeds.insert(out.seeds.end(), r.seeds.begin(), r.seeds.end());
    }
    out.overall_accuracy /= static_cast<double>(reports.size());
    for (std::size_t i = 0; i < counted.size(); ++i)
        out.per_class_accuracy[i] = counted[i] > 0 ? out.per_class_accuracy[i] / counted[i]
                                                   : std::numeric_limits<double>::quiet_NaN();
    return out;
}

std::string check_report_invariants(const EvalReport& r)
{
    const std::size_t n = r.labels.size();
    if (r.confusion.size() != n || r.per_class_accuracy.size() != n) return "shape mismatch";
    std::int64_t diag = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (r.confusion[i].size() != n) return "confusion row " + std::to_string(i) + " has wrong width";
        for (auto v : r.confusion[i])
            if (v < 0) return "negative confusion count";
        diag += r.confusion[i][i];
        const auto s = r.row_sum(i);
        if (s == 0) {
            if (!std::isnan(r.per_class_accuracy[i])) return "class without records must report NaN accuracy";
            continue;
        }
        const double expect = static_cast<double>(r.confusion[i][i]) / static_cast<double>(s);
        if (std::abs(r.per_class_accuracy[i] - expect) > 1e-12)
            return "per-class accuracy of class " + std::to_string(i) + " disagrees with the confusion matrix";
    }
    const auto t = r.total();
    const double overall = t > 0 ? static_cast<double>(diag) / static_cast<double>(t) : 0.0;
    if (std::abs(r.overall_accuracy - overall) > 1e-12) return "overall accuracy disagrees with the confusion trace";
    if (r.overall_accuracy < 0.0 || r.overall_accuracy > 1.0) return "overall accuracy outside [0,1]";
    return {};
}

std::string format_report_csv(const EvalReport& r)
{
    std::string out = "class,accuracy,correct,total\n";
    char buf[256];
    for (std::size_t i = 0; i < r.labels.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%s,%.17g,%lld,%lld\n", r.labels[i].c_str(), r.per_class_accuracy[i],
                      static_cast<long long>(r.confusion[i][i]), static_cast<long long>(r.row_sum(i)));
        out += buf;
    }
    std::int64_t diag = 0;
    for (std::size_t i = 0; i < r.labels.size(); ++i) diag += r.confusion[i][i];
    std::snprintf(buf, sizeof buf, "overall,%.17g,%lld,%lld\n", r.overall_accuracy, static_cast<long long>(diag),
                  static_cast<long long>(r.total()));
    out += buf;
    return out;
}

std::string format_report_text(const EvalReport& r)
{
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "mode: %s\nconfig_hash: %s\nseeds:", r.mode.c_str(), r.config_hash.c_str());
    out += buf;
    for (auto s : r.seeds) out += " " + std::to_string(s);
    std::snprintf(buf, sizeof buf, "\ntest records: %lld\noverall accuracy: %.2f%%\n\nper-class accuracy:\n",
                  static_cast<long long>(r.total()), 100.0 * r.overall_accuracy);
    out += buf;
    for (std::size_t i = 0; i < r.labels.size(); ++i) {
        std::snprintf(buf, sizeof buf, "  %-16s %6.2f%%  (%lld/%lld)\n", r.labels[i].c_str(),
                      100.0 * r.per_class_accuracy[i], static_cast<long long>(r.confusion[i][i]),
                      static_cast<long long>(r.row_sum(i)));
        out += buf;
    }
    out += "\nconfusion (row-normalised %, rows = true class, columns = predicted):\n";
    const auto norm = r.row_normalized();
    out += std::string(18, ' ');
    for (std::size_t j = 0; j < r.labels.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%7zu", j);
        out += buf;
    }
    out += "\n";
    for (std::size_t i = 0; i < r.labels.size(); ++i) {
        std::snprintf(buf, sizeof buf, "  %2zu %-13s", i, r.labels[i].c_str());
        out += buf;
        for (double v : norm[i]) {
            std::snprintf(buf, sizeof buf, "%7.1f", 100.0 * v);
            out += buf;
        }
        out += "\n";
    }
    return out;
}

std::string format_curve_csv(const KShotCurve& curve)
{
    std::string out = "k,mean,std,mode\n";
    char buf[256];
    for (const auto& p : curve.points) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%s\n", p.k, p.mean, p.std, curve.mode.c_str());
        out += buf;
    }
    return out;
}

std::string format_curves_gnuplot(std::span<const KShotCurve> curves)
{
    std::string out;
    char buf[256];
    for (std::size_t c = 0; c < curves.size(); ++c) {
        if (c > 0) out += "\n\n";
        out += "# mode " + curves[c].mode + "\n# k mean std\n";
        for (const auto& p : curves[c].points) {
            std::snprintf(buf, sizeof buf, "%d %.10g %.10g\n", p.k, p.mean, p.std);
            out += buf;
        }
    }
    return out;
}

std::pair<double, double> mean_std(std::span<const double> values)
{
    if (values.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    if (values.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

} // namespace fsdml
