#include <doctest.h>

#include <fstream>
#include <set>

#include "fsdml/config.hpp"
#include "fsdml/errors.hpp"
#include "helpers.hpp"

using namespace fsdml;

TEST_SUITE("config") {

TEST_CASE("defaults follow the documented values")
{
    const RunConfig c;
    CHECK(c.seeds.size() == 10);
    CHECK(c.k == 5);
    CHECK(c.pipeline.gan.lambda_gp == 10.0);
    CHECK(c.pipeline.gan.beta_cls == 0.01);
    CHECK(c.pipeline.gan.critic_adam.learning_rate == 1e-4);
    CHECK(c.pipeline.dml.adam.learning_rate == 1e-3);
    CHECK(c.pipeline.per_record == 1);
    CHECK_FALSE(c.pipeline.standardize);
    CHECK(c.pipeline.split.train_frac == 0.6);
    CHECK(c.pipeline.bench.num_classes == 8);
    CHECK(c.pipeline.bench.game_classes == 7);
    CHECK(c.pipeline.bench.game_overlap == 3);
    CHECK_NOTHROW(validate(c));
}

TEST_CASE("registry keys are unique and every key round-trips through its own output")
{
    std::set<std::string> seen;
    RunConfig c;
    c.ground = "g.jsonl";
    c.pipeline.gan.generator_hidden = {7, 6, 5};
    c.pipeline.dml.weights.w = {1.0, 0.1, 0.2, 1.0 / 3.0};
    c.modes = {DmlMode::games, DmlMode::generated};
    for (const auto& k : config_keys()) {
        CHECK(seen.insert(k.name).second);
        RunConfig copy;
        set_config_value(copy, k.name, k.get(c));
        CHECK(k.get(copy) == k.get(c));
    }
    for (const char* key : {"seed", "lambda-gp", "beta-cls", "n-critic", "w1", "w2", "w3", "w4", "dml-epochs",
                            "gan-batch", "dml-batch", "gan-lr", "dml-lr", "k", "seeds", "mode", "out", "eq2-literal",
                            "interpolate-real-aerial", "per-record", "gen-branch-weight"})
        CHECK(seen.count(key) == 1);
}

TEST_CASE("format_config then apply_config_text reproduces the config")
{
    RunConfig c;
    c.seed = 42;
    c.ks = {15, 5};
    c.pipeline.gan.options.eq2_literal = true;
    c.pipeline.dml.adam.learning_rate = 0.1 + 0.2;
    c.out = "/tmp/x";
    const std::string text = format_config(c);
    RunConfig back;
    apply_config_text(back, text);
    CHECK(format_config(back) == text);
    CHECK(back.pipeline.dml.adam.learning_rate == c.pipeline.dml.adam.learning_rate);
    CHECK(config_hash(back) == config_hash(c));
}

TEST_CASE("values parse: numbers, lists, booleans, modes")
{
    RunConfig c;
    apply_config_text(c, "# comment\n"
                         "lambda-gp = 2.5   # trailing\n"
                         "\n"
                         "seeds = 4, 5 ,6\n"
                         "eq2-literal = yes\n"
                         "standardize = off\n"
                         "modes = baseline,games\n"
                         "gan-lr = 3e-4\n"
                         "gen-hidden = 4,5,6\n");
    CHECK(c.pipeline.gan.lambda_gp == 2.5);
    CHECK(c.seeds == std::vector<std::uint64_t>{4, 5, 6});
    CHECK(c.pipeline.gan.options.eq2_literal);
    CHECK_FALSE(c.pipeline.standardize);
    CHECK(c.modes == std::vector<DmlMode>{DmlMode::baseline, DmlMode::games});
    CHECK(c.pipeline.gan.critic_adam.learning_rate == 3e-4);
    CHECK(c.pipeline.gan.generator_adam.learning_rate == 3e-4);
    CHECK(c.pipeline.gan.generator_hidden == std::vector<int>{4, 5, 6});
}

TEST_CASE("bad keys and values are configuration errors naming the key")
{
    RunConfig c;
    try {
        set_config_value(c, "lamda-gp", "1");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("lamda-gp") != std::string::npos);
    }
    try {
        set_config_value(c, "n-critic", "five");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("n-critic") != std::string::npos);
    }
    CHECK_THROWS_AS(set_config_value(c, "eq2-literal", "maybe"), ConfigError);
    CHECK_THROWS_AS(set_config_value(c, "mode", "everything"), ConfigError);
    CHECK_THROWS_AS(set_config_value(c, "seeds", ""), ConfigError);
    CHECK_THROWS_AS(set_config_value(c, "k", "5x"), ConfigError);
    CHECK_THROWS_AS(apply_config_text(c, "just words\n"), ConfigError);
    CHECK_THROWS_AS(apply_config_file(c, "/nonexistent/fsdml.cfg"), InputError);
}

TEST_CASE("validate catches out-of-range settings")
{
    RunConfig c;
    c.k = 0;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = RunConfig{};
    c.pipeline.split.test_frac = 0.5;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = RunConfig{};
    c.pipeline.gan.n_critic = 0;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = RunConfig{};
    c.pipeline.dml.weights.w[0] = 0.0;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = RunConfig{};
    c.pipeline.bench.game_overlap = 9;
    CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("the config hash ignores paths but sees every tunable")
{
    RunConfig a, b;
    b.out = "elsewhere";
    b.ground = "other.jsonl";
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 16);
    b.pipeline.gan.beta_cls = 0.02;
    CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("config files apply like text")
{
    const auto dir = testutil::scratch_dir("config");
    {
        std::ofstream f(dir / "run.cfg");
        f << "seed = 9\nw2 = 0.25\n";
    }
    RunConfig c;
    apply_config_file(c, (dir / "run.cfg").string());
    CHECK(c.seed == 9);
    CHECK(c.pipeline.dml.weights.w[1] == 0.25);
}

}
