#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>
#include <random>

#include "kgsens/error.hpp"
#include "kgsens/hyperspace.hpp"

using namespace kgsens;

TEST_CASE("default space layout") {
    auto space = default_space();
    CHECK(space.encoded_width() == 20);
    CHECK(space.dimensions().size() == 12);
    auto names = space.column_names();
    CHECK(names[0] == "training_method=negative_sampling");
    CHECK(names[5] == "loss=margin_ranking");
    CHECK(names[11] == "optimizer=adagrad");
    CHECK(names[12] == "embedding_size");
    CHECK(names[19] == "dropout");
    auto groups = space.column_groups();
    CHECK(groups[16] == "weight initialisation");
    CHECK(groups[17] == "weight initialisation");
    CHECK(groups[7] == "weight initialisation");
    for (std::size_t c = 0; c < 20; ++c) CHECK(space.is_dummy_column(c) == (c < 12));
    CHECK_THROWS_AS(space.index_of("nope"), UsageError);
}

TEST_CASE("decode maps bounds and scales") {
    auto space = default_space();
    std::vector<double> p(20, 0.0);
    p[1] = 1.0;  // 1vsAll
    p[3] = 1.0;  // bce
    p[9] = 1.0;  // xavier_uniform
    p[11] = 1.0;  // adagrad
    p[12] = 1.0;
    p[14] = 0.5;
    auto d = decode(p, space);
    TrialConfig cfg{"x", "distmult", d.values};
    CHECK(cfg.level(space, "training_method") == "1vsAll");
    CHECK(cfg.level(space, "loss") == "bce");
    CHECK(cfg.level(space, "weight_init") == "xavier_uniform");
    CHECK(cfg.level(space, "optimizer") == "adagrad");
    CHECK(cfg.number(space, "embedding_size") == 256);
    CHECK(cfg.number(space, "batch_size") == 32);
    CHECK(cfg.number(space, "learning_rate") == doctest::Approx(std::sqrt(1e-4 * 1e-1)));
    CHECK(cfg.number(space, "init_uniform_lower") == -1.0);
    CHECK(std::holds_alternative<std::int64_t>(d.values[4]));
    CHECK_THROWS_AS(decode(std::vector<double>(19, 0.0), space), UsageError);
    p[0] = 1.2;
    CHECK_THROWS_AS(decode(p, space), UsageError);
}

TEST_CASE("categorical ties go to the lowest level") {
    auto space = default_space();
    std::vector<double> p(20, 0.5);
    auto d = decode(p, space);
    CHECK(std::get<std::string>(d.values[0]) == "negative_sampling");
    CHECK(std::get<std::string>(d.values[3]) == "adam");
    CHECK(d.rounded[0] == 1.0);
    CHECK(d.rounded[1] == 0.0);
    CHECK(d.rounded[15] == 0.5);
}

TEST_CASE("integer rounding is half up") {
    HyperparameterSpace space({Dimension{"k", "k", DimensionKind::integer, 0, 10, Scale::linear, {}}});
    CHECK(std::get<std::int64_t>(decode(std::vector<double>{0.25}, space).values[0]) == 3);
    CHECK(std::get<std::int64_t>(decode(std::vector<double>{0.24}, space).values[0]) == 2);
}

TEST_CASE("decode then encode is stable") {
    auto space = default_space();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> p(20);
        for (auto& x : p) x = u(rng);
        auto d = decode(p, space);
        auto e = encode(d.values, space);
        auto again = decode(e, space);
        CHECK(again.values == d.values);
        for (std::size_t c = 0; c < 12; ++c) CHECK(e[c] == d.rounded[c]);
        for (std::size_t c = 12; c < 20; ++c) {
            CHECK(e[c] >= 0.0);
            CHECK(e[c] <= 1.0);
        }
        // continuous columns survive exactly up to float round-off
        CHECK(e[14] == doctest::Approx(p[14]).epsilon(1e-9));
    }
}

TEST_CASE("space json round-trip and validation") {
    auto space = default_space();
    auto back = space_from_json(space_to_json(space));
    CHECK(back.column_names() == space.column_names());
    CHECK(back.column_groups() == space.column_groups());
    CHECK_THROWS_AS(space_from_json(nlohmann::json::parse(R"({"dimensions":[{"name":"a","kind":"categorical","levels":["x"]}]})")),
                    UsageError);
    CHECK_THROWS_AS(
        space_from_json(nlohmann::json::parse(R"({"dimensions":[{"name":"a","kind":"continuous","lower":0,"upper":1,"scale":"log"}]})")),
        UsageError);
}
