#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "kgsens/error.hpp"
#include "kgsens/evaluator.hpp"
#include "kgsens/kge_loss.hpp"
#include "kgsens/kge_model.hpp"
#include "kgsens/kge_trainer.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace kgsens;
using namespace kgsens::testing;

namespace {

EmbeddingModel random_model(Method method, std::size_t entities, std::size_t relations, std::size_t dim,
                            std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    InitParams params;
    params.normal_std = 0.5;
    return EmbeddingModel::create(method, entities, relations, dim, InitScheme::normal, params, rng);
}

ScoreRows rows_of(std::vector<double> scores, std::vector<double> labels, std::vector<std::size_t> offsets) {
    ScoreRows r;
    r.scores = std::move(scores);
    r.labels = std::move(labels);
    r.row_offsets = std::move(offsets);
    return r;
}

}  // namespace

TEST_CASE("scorers agree with their closed forms") {
    auto m = random_model(Method::distmult, 3, 2, 4, 1);
    double expected = 0.0;
    for (std::size_t k = 0; k < 4; ++k) expected += m.entities(0, k) * m.relations(1, k) * m.entities(2, k);
    CHECK(score(m, 0, 1, 2) == doctest::Approx(expected));

    auto c = random_model(Method::complex, 3, 2, 4, 2);
    auto e = [&](EntityId x, std::size_t k, bool im) { return c.entities(x, k + (im ? 2 : 0)); };
    auto r = [&](std::size_t k, bool im) { return c.relations(0, k + (im ? 2 : 0)); };
    expected = 0.0;
    for (std::size_t k = 0; k < 2; ++k) {
        expected += e(1, k, false) * r(k, false) * e(2, k, false) + e(1, k, true) * r(k, false) * e(2, k, true) +
                    e(1, k, false) * r(k, true) * e(2, k, true) - e(1, k, true) * r(k, true) * e(2, k, false);
    }
    CHECK(score(c, 1, 0, 2) == doctest::Approx(expected));

    auto rs = random_model(Method::rescal, 3, 2, 3, 3);
    expected = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) expected += rs.entities(2, i) * rs.relations(1, i * 3 + j) * rs.entities(0, j);
    }
    CHECK(score(rs, 2, 1, 0) == doctest::Approx(expected));
    CHECK(rs.relation_width() == 9);

    auto t = random_model(Method::transe, 3, 2, 4, 4);
    expected = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
        const double diff = t.entities(0, k) + t.relations(0, k) - t.entities(1, k);
        expected += diff * diff;
    }
    CHECK(score(t, 0, 0, 1) == doctest::Approx(-std::sqrt(expected)));
}

TEST_CASE("subject-slot scoring matches object-slot scoring") {
    for (Method method : {Method::transe, Method::distmult, Method::complex, Method::rescal}) {
        auto m = random_model(method, 6, 2, 4, 7);
        std::vector<double> out(6);
        QueryView q{method, 4, m.entities.row(3), m.relations.row(1), Slot::subject};
        score_candidates(q, m.entities, {}, out);
        for (EntityId s = 0; s < 6; ++s) CHECK(out[s] == doctest::Approx(score(m, s, 1, 3)));
    }
}

TEST_CASE("loss values") {
    auto bce = rows_of({0.5, -1.0}, {1.0, 0.0}, {});
    CHECK(compute_loss(bce, LossKind::bce, 1.0) == doctest::Approx(0.3936693355));
    auto kl = rows_of({1.0, 2.0, 3.0}, {0.0, 1.0, 1.0}, {0, 3});
    CHECK(compute_loss(kl, LossKind::kl, 1.0) == doctest::Approx(0.9076059644));
    auto margin = rows_of({0.2, 0.5, -2.0}, {1.0, 0.0, 0.0}, {0, 3});
    CHECK(compute_loss(margin, LossKind::margin_ranking, 1.0) == doctest::Approx(0.65));
    CHECK(compute_loss(margin, LossKind::margin_ranking, 0.1) == doctest::Approx(0.2));

    CHECK_THROWS_AS(compute_loss(rows_of({}, {}, {}), LossKind::bce, 1.0), UsageError);
    CHECK_THROWS_AS(compute_loss(rows_of({1.0}, {0.5}, {}), LossKind::bce, 1.0), UsageError);
    CHECK_THROWS_AS(compute_loss(rows_of({1.0, 2.0}, {0.0, 0.0}, {0, 2}), LossKind::kl, 1.0), UsageError);
    CHECK_THROWS_AS(compute_loss(rows_of({1.0, 2.0}, {1.0, 1.0}, {0, 2}), LossKind::margin_ranking, 1.0), UsageError);
}

TEST_CASE("loss gradients match finite differences") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 2.0);
    for (LossKind kind : {LossKind::bce, LossKind::kl, LossKind::margin_ranking}) {
        auto rows = rows_of({n(rng), n(rng), n(rng), n(rng), n(rng)}, {1, 0, 0, 1, 0}, {0, 3, 5});
        std::vector<double> grad(5);
        compute_loss(rows, kind, 1.0, grad);
        for (std::size_t i = 0; i < 5; ++i) {
            auto plus = rows, minus = rows;
            plus.scores[i] += 1e-6;
            minus.scores[i] -= 1e-6;
            const double fd = (compute_loss(plus, kind, 1.0) - compute_loss(minus, kind, 1.0)) / 2e-6;
            CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}


TEST_CASE("training gradients match central differences") {
    const auto combos = valid_combos();
    CHECK(combos.size() == 23);
    for (const auto& combo : combos) {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            INFO(method_name(combo.method), " ", training_method_name(combo.training), " ", loss_name(combo.loss),
                 " seed ", seed);
            CHECK(gradient_check(combo, seed) <= 0.0);
        }
    }
}

TEST_CASE("negative sampling batch shape") {
    auto kg = kgsens::testing::random_graph(30, 3, 120, 8);
    TrainingSettings settings;
    settings.training = TrainingMethod::negative_sampling;
    settings.loss = LossKind::bce;
    Trainer trainer(kg, settings, 1);
    std::vector<std::size_t> examples = {0, 1, 2};
    auto batch = trainer.prepare_batch(examples);
    CHECK(batch.rows.row_count() == 3);
    CHECK(batch.rows.labels.size() == 3 * 51);
    double positives = 0.0;
    for (double y : batch.rows.labels) positives += y;
    CHECK(positives == 3.0);
}

TEST_CASE("KvsAll keys cover both slots") {
    auto kg = kgsens::testing::random_graph(10, 2, 30, 4);
    TrainingSettings settings;
    Trainer trainer(kg, settings, 1);
    std::set<std::tuple<EntityId, RelationId, int>> keys;
    for (const auto& t : kg.train()) {
        keys.insert({t.subject, t.predicate, 0});
        keys.insert({t.object, t.predicate, 1});
    }
    CHECK(trainer.example_count() == keys.size());
}

TEST_CASE("plateau schedule") {
    TrainState s;
    s.learning_rate = 1.0;
    lr_step(s, 0.5, 1);
    CHECK(s.best_valid_mrr == 0.5);
    lr_step(s, 0.50005, 1);
    CHECK(s.epochs_since_improvement == 1);
    CHECK(s.learning_rate == 1.0);
    lr_step(s, 0.4, 1);
    CHECK(s.learning_rate == doctest::Approx(0.95));
    CHECK(s.epochs_since_improvement == 0);
    lr_step(s, 0.6, 1);
    CHECK(s.best_valid_mrr == 0.6);
}

TEST_CASE("optimizers only move touched rows") {
    for (OptimizerKind opt : {OptimizerKind::adam, OptimizerKind::adagrad}) {
        auto m = random_model(Method::distmult, 4, 2, 3, 5);
        auto before = m;
        auto state = TrainState::fresh(m, 0.1);
        auto g = Gradient::zeros_like(m);
        g.entities(2, 0) = 1.0;
        g.touched_entities = {2};
        optimizer_step(m, state, g, opt);
        CHECK(m.entities(2, 0) == doctest::Approx(before.entities(2, 0) - 0.1).epsilon(1e-6));
        CHECK(m.entities(2, 1) == before.entities(2, 1));
        CHECK(m.entities(1, 0) == before.entities(1, 0));
        CHECK(m.relations == before.relations);
    }
}

TEST_CASE("settings from a decoded config") {
    auto space = default_space();
    std::vector<double> p(20, 0.0);
    p[2] = p[4] = p[8] = p[10] = 1.0;
    p[12] = 1.0;
    p[15] = 0.3;
    TrialConfig cfg{"umls", "complex", decode(p, space).values};
    auto s = settings_from_config(cfg, space, {});
    CHECK(s.method == Method::complex);
    CHECK(s.training == TrainingMethod::k_vs_all);
    CHECK(s.loss == LossKind::kl);
    CHECK(s.init == InitScheme::xavier_normal);
    CHECK(s.optimizer == OptimizerKind::adam);
    CHECK(s.dim == 256);
    CHECK(s.lr_patience == 3);
    cfg.method = "conve";
    CHECK_THROWS_AS(settings_from_config(cfg, space, {}), UsageError);
}

TEST_CASE("initializers respect their parameters") {
    InitParams params;
    params.normal_std = 0.01;
    params.uniform_lower = -0.2;
    auto n = init_weights(InitScheme::normal, 100, 50, params, 1);
    double ss = 0.0;
    for (std::size_t i = 0; i < 5000; ++i) ss += n.data()[i] * n.data()[i];
    CHECK(std::sqrt(ss / 5000) == doctest::Approx(0.01).epsilon(0.05));
    auto u = init_weights(InitScheme::uniform, 100, 50, params, 1);
    for (std::size_t i = 0; i < 5000; ++i) {
        CHECK(u.data()[i] >= -0.2);
        CHECK(u.data()[i] <= 0.2);
    }
    CHECK(init_weights(InitScheme::xavier_uniform, 3, 4, params, 9) == init_weights(InitScheme::xavier_uniform, 3, 4, params, 9));
}


TEST_CASE("evaluator equals a brute-force ranker") {
    std::mt19937_64 rng(21);
    for (std::uint64_t g = 0; g < 100; ++g) {
        const std::size_t n = 2 + g % 7;
        auto kg = kgsens::testing::random_graph(n, 2, 3 * n, g);
        const Method method = static_cast<Method>(g % 4);
        auto m = random_model(method, n, 2, 4, g);
        if (g % 10 == 0) {
            // force ties
            for (std::size_t k = 0; k < m.entities.cols(); ++k) m.entities(n - 1, k) = m.entities(0, k);
        }
        PositiveSet pos(kg);
        std::vector<RankResult> ranks;
        auto result = evaluate(m, kg.test(), pos, Direction::both, &ranks);
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& t : kg.test()) {
            for (Slot slot : {Slot::object, Slot::subject}) {
                sum += 1.0 / brute_rank(m, t, slot, kg);
                ++count;
            }
        }
        CHECK(result.rank_count == count);
        if (count) CHECK(result.mrr == doctest::Approx(sum / count).epsilon(1e-12));
    }
}

TEST_CASE("rank from scores with ties and filtering") {
    std::vector<Triple> train = {{0, 0, 1}, {0, 0, 3}};
    KnowledgeGraph g({"a", "b", "c", "d"}, {"r"}, train, {}, {{0, 0, 2}});
    PositiveSet pos(g);
    std::vector<double> scores = {0.9, 5.0, 1.0, 1.0};
    auto r = rank_from_scores(scores, {0, 0, 2}, Slot::object, pos);
    CHECK(r.raw_rank == doctest::Approx(2.5));
    CHECK(r.filtered_rank == doctest::Approx(1.0));
    EvaluationResult s = summarize(std::vector<RankResult>{r});
    CHECK(s.mrr == 1.0);
    CHECK(s.hits1 == 1.0);
}

TEST_CASE("random baseline") {
    double h = 0.0;
    for (int i = 1; i <= 135; ++i) h += 1.0 / i;
    CHECK(random_baseline_mrr(135) == doctest::Approx(h / 135));
    CHECK(random_baseline_mrr(135) == doctest::Approx(0.04061).epsilon(1e-3));
    CHECK(random_baseline_mrr(1) == 1.0);
}

TEST_CASE("short training run improves on random ranking") {
    auto kg = kgsens::testing::random_graph(12, 2, 50, 2);
    PositiveSet pos(kg);
    TrainingSettings settings;
    settings.dim = 16;
    settings.batch_size = 16;
    settings.learning_rate = 0.05;
    settings.constants.max_epochs = 30;
    auto a = train(kg, pos, settings, 5);
    auto b = train(kg, pos, settings, 5);
    CHECK(a.completed);
    CHECK(a.epochs_run == 30);
    CHECK(a.test.mrr == b.test.mrr);
    CHECK(a.test.mrr > 0.0);
    CHECK(a.test.mrr <= 1.0);
}
