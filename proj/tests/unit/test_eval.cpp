#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fsdml/errors.hpp"
#include "fsdml/eval.hpp"
#include "helpers.hpp"

using namespace fsdml;

namespace {

std::vector<std::string> names(int n)
{
    std::vector<std::string> v;
    for (int i = 0; i < n; ++i) v.push_back("c" + std::to_string(i));
    return v;
}

std::vector<int> balanced(int classes, int per)
{
    std::vector<int> y;
    for (int c = 0; c < classes; ++c)
        for (int i = 0; i < per; ++i) y.push_back(c);
    return y;
}

DmlNet constant_net(int dim, int classes, int winner)
{
    DmlConfig cfg;
    cfg.trunk_hidden = {6, 5};
    DmlNet net = build_dml(dim, classes, 2, 3, cfg);
    net.head(Head::real_on_real).weights[0].setZero();
    net.head(Head::real_on_real).biases[0].setZero();
    net.head(Head::real_on_real).biases[0][winner] = 5.0;
    return net;
}

} // namespace

TEST_SUITE("eval") {

TEST_CASE("perfect predictions give accuracy 1 and a diagonal confusion")
{
    const auto y = balanced(4, 5);
    const EvalReport r = evaluate_predictions(names(4), y, y);
    CHECK(r.overall_accuracy == 1.0);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) CHECK(r.confusion[i][j] == (i == j ? 5 : 0));
    CHECK(check_report_invariants(r).empty());
}

TEST_CASE("a constant predictor on a balanced 8-class set scores 0.125")
{
    const auto y = balanced(8, 15);
    const std::vector<int> pred(y.size(), 2);
    const EvalReport r = evaluate_predictions(names(8), y, pred);
    CHECK(r.overall_accuracy == 0.125);
    for (std::size_t i = 0; i < 8; ++i) CHECK(r.row_sum(i) == 15);
    CHECK(r.per_class_accuracy[2] == 1.0);
    CHECK(r.per_class_accuracy[0] == 0.0);
    CHECK(r.total() == 120);
}

TEST_CASE("evaluate with a network")
{
    const Dataset test = testutil::clusters(8, 15, 4, Domain::real_aerial, 5);
    const EvalReport r = evaluate(constant_net(4, 8, 6), test);
    CHECK(r.overall_accuracy == 0.125);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(r.row_sum(i) == 15);
        CHECK(r.confusion[i][6] == 15);
    }
    CHECK(r.labels == test.label_space());
    CHECK(check_report_invariants(r).empty());
    CHECK_THROWS_AS(evaluate(constant_net(4, 7, 1), test), ConfigError);
}

TEST_CASE("report invariants hold on random prediction sets")
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const int classes = 2 + static_cast<int>(rng() % 7);
        const int n = static_cast<int>(rng() % 60);
        std::vector<int> truth(static_cast<std::size_t>(n)), pred(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            truth[static_cast<std::size_t>(i)] = static_cast<int>(rng() % static_cast<unsigned>(classes));
            pred[static_cast<std::size_t>(i)] = static_cast<int>(rng() % static_cast<unsigned>(classes));
        }
        const EvalReport r = evaluate_predictions(names(classes), truth, pred);
        CHECK(check_report_invariants(r).empty());
        std::int64_t trace = 0;
        for (std::size_t i = 0; i < r.confusion.size(); ++i) {
            trace += r.confusion[i][i];
            const auto count = std::count(truth.begin(), truth.end(), static_cast<int>(i));
            CHECK(r.row_sum(i) == count);
            if (count == 0)
                CHECK(std::isnan(r.per_class_accuracy[i]));
            else
                CHECK(r.per_class_accuracy[i] == doctest::Approx(static_cast<double>(r.confusion[i][i]) / count));
        }
        if (n > 0) CHECK(r.overall_accuracy == doctest::Approx(static_cast<double>(trace) / n));

        // permuting record order changes nothing
        std::vector<std::size_t> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<int> t2, p2;
        for (auto i : order) {
            t2.push_back(truth[i]);
            p2.push_back(pred[i]);
        }
        const EvalReport s = evaluate_predictions(names(classes), t2, p2);
        CHECK(s.confusion == r.confusion);
        CHECK(s.overall_accuracy == r.overall_accuracy);
    }
}

TEST_CASE("invariant checker spots broken reports")
{
    const auto y = balanced(3, 4);
    EvalReport r = evaluate_predictions(names(3), y, y);
    r.overall_accuracy = 0.5;
    CHECK_FALSE(check_report_invariants(r).empty());
    r = evaluate_predictions(names(3), y, y);
    r.per_class_accuracy[1] = 0.2;
    CHECK_FALSE(check_report_invariants(r).empty());
}

TEST_CASE("evaluate_predictions input checks")
{
    CHECK_THROWS_AS(evaluate_predictions(names(3), std::vector<int>{0, 1}, std::vector<int>{0}), ShapeError);
    CHECK_THROWS_AS(evaluate_predictions(names(3), std::vector<int>{0, 3}, std::vector<int>{0, 1}), InputError);
}

TEST_CASE("row normalisation")
{
    const EvalReport r = evaluate_predictions(names(3), std::vector<int>{0, 0, 0, 0, 1}, std::vector<int>{0, 1, 1, 2, 1});
    const auto n = r.row_normalized();
    CHECK(n[0][0] == 0.25);
    CHECK(n[0][1] == 0.5);
    CHECK(n[1][1] == 1.0);
    CHECK(n[2][0] == 0.0);
    CHECK(n[2][2] == 0.0);
}

TEST_CASE("average_reports")
{
    const auto y = balanced(2, 5);
    std::vector<int> p4 = y, p6 = y;
    // accuracy 0.4 and 0.6
    for (int i : {0, 1, 2, 5, 6, 7}) p4[static_cast<std::size_t>(i)] = 1 - p4[static_cast<std::size_t>(i)];
    for (int i : {0, 1, 5, 6}) p6[static_cast<std::size_t>(i)] = 1 - p6[static_cast<std::size_t>(i)];
    EvalReport a = evaluate_predictions(names(2), y, p4), b = evaluate_predictions(names(2), y, p6);
    a.mode = b.mode = "baseline";
    a.seeds = {1};
    b.seeds = {2};
    REQUIRE(a.overall_accuracy == doctest::Approx(0.4));
    REQUIRE(b.overall_accuracy == doctest::Approx(0.6));
    const std::vector<EvalReport> both{a, b};
    const EvalReport m = average_reports(both);
    CHECK(m.overall_accuracy == doctest::Approx(0.5));
    CHECK(m.confusion[0][0] + m.confusion[0][1] == 10);
    CHECK(m.seeds == std::vector<std::uint64_t>{1, 2});

    const std::vector<EvalReport> self{a, a};
    const EvalReport s = average_reports(self);
    CHECK(s.overall_accuracy == a.overall_accuracy);
    CHECK(s.per_class_accuracy == a.per_class_accuracy);

    CHECK_THROWS_AS(average_reports(std::vector<EvalReport>{}), InputError);
    EvalReport other = evaluate_predictions(names(3), std::vector<int>{0}, std::vector<int>{0});
    other.mode = "baseline";
    CHECK_THROWS_AS(average_reports(std::vector<EvalReport>{a, other}), ConfigError);
    EvalReport games = b;
    games.mode = "games";
    CHECK_THROWS_AS(average_reports(std::vector<EvalReport>{a, games}), ConfigError);
}

TEST_CASE("report and curve formats")
{
    EvalReport r = evaluate_predictions(names(2), std::vector<int>{0, 0, 1, 1}, std::vector<int>{0, 1, 1, 1});
    r.mode = "games";
    r.seeds = {3, 4};
    r.config_hash = "deadbeef";
    CHECK(format_report_csv(r) == "class,accuracy,correct,total\nc0,0.5,1,2\nc1,1,2,2\noverall,0.75,3,4\n");
    const std::string text = format_report_text(r);
    CHECK(text.find("mode: games") != std::string::npos);
    CHECK(text.find("seeds: 3 4") != std::string::npos);
    CHECK(text.find("75.00%") != std::string::npos);

    const KShotCurve c{"baseline", {{5, 0.5, 0.1}, {10, 0.75, 0.0}}};
    CHECK(format_curve_csv(c) == "k,mean,std,mode\n5,0.5,0.10000000000000001,baseline\n10,0.75,0,baseline\n");
    const std::vector<KShotCurve> cs{c, KShotCurve{"games", {{5, 0.25, 0.0}}}};
    const std::string dat = format_curves_gnuplot(cs);
    CHECK(dat.find("# mode baseline") != std::string::npos);
    CHECK(dat.find("\n\n\n# mode games") != std::string::npos);
}

TEST_CASE("mean_std uses the sample standard deviation")
{
    const std::vector<double> v{0.4, 0.6};
    const auto [m, s] = mean_std(v);
    CHECK(m == doctest::Approx(0.5));
    CHECK(s == doctest::Approx(std::sqrt(0.02)));
    const std::vector<double> one{0.3};
    CHECK(mean_std(one).second == 0.0);
}

}
