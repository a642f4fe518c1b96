#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "kgsens/error.hpp"
#include "kgsens/hyperspace.hpp"
#include "kgsens/sensitivity.hpp"

using namespace kgsens;

namespace {

Matrix make_matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
    Matrix m(rows, cols);
    std::copy(values.begin(), values.end(), m.data().begin());
    return m;
}

}  // namespace

TEST_CASE("top_fraction selection") {
    std::vector<double> q(100);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = static_cast<double>(i % 37);
    auto top = top_fraction(q, 0.05);
    REQUIRE(top.size() == 5);
    CHECK(q[top[0]] == 36.0);
    // ties keep the earlier index first
    CHECK(top[0] == 36);
    CHECK(top[1] == 73);
    CHECK(top_fraction(std::vector<double>(10, 1.0), 0.3).size() == 3);
    CHECK(top_fraction(std::vector<double>(7, 1.0), 0.01).size() == 1);
    CHECK(top_fraction(std::vector<double>(7, 1.0), 1.0).size() == 7);
    CHECK_THROWS_AS(top_fraction(std::vector<double>{}, 0.5), UsageError);
    CHECK_THROWS_AS(top_fraction(std::vector<double>{1.0}, 0.0), UsageError);
    CHECK_THROWS_AS(top_fraction(std::vector<double>{1.0}, 1.5), UsageError);
}

// Reference values from numpy.linalg.lstsq on the centred system.
TEST_CASE("ols full-rank fit") {
    auto x = make_matrix(5, 2, {0, 0, 1, 0, 0, 1, 1, 1, 0.5, 0.25});
    std::vector<double> y = {1.0, 3.0, 0.0, 2.1, 1.4};
    auto m = fit_ols(x, y);
    CHECK(m.coefficients[0] == doctest::Approx(2.05));
    CHECK(m.coefficients[1] == doctest::Approx(-0.8809523809523809));
    CHECK(m.intercept == doctest::Approx(0.8714285714285716));
    CHECK(m.r_squared == doctest::Approx(0.9799572172619048));
    CHECK(m.rank == 2);
    CHECK(m.training_row_count == 5);
}

TEST_CASE("ols minimum-norm fit with fewer rows than inputs") {
    auto x = make_matrix(3, 5, {0.1, 1, 0.3, 0.9, 0.2, 0.4, 1, 0.1, 0.2, 0.8, 0.7, 1, 0.9, 0.5, 0.5});
    std::vector<double> y = {0.3, 0.5, 0.45};
    auto m = fit_ols(x, y);
    const std::vector<double> expected = {0.08909144369303154, 0.0, 0.0038224051749486286, -0.1446633343134373,
                                          0.12128785651279043};
    for (std::size_t i = 0; i < 5; ++i) CHECK(m.coefficients[i] == doctest::Approx(expected[i]).epsilon(1e-9));
    CHECK(m.coefficients[1] == 0.0);
    CHECK(m.intercept == doctest::Approx(0.3958835636577477).epsilon(1e-9));
    CHECK(m.r_squared == doctest::Approx(1.0));
    CHECK(m.rank == 2);
    for (std::size_t r = 0; r < 3; ++r) CHECK(m.predict(x.row(r)) == doctest::Approx(y[r]));
}

TEST_CASE("ols residuals are orthogonal to the centred columns") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix x(30, 6);
        std::vector<double> y(30);
        for (std::size_t r = 0; r < 30; ++r) {
            for (std::size_t c = 0; c < 6; ++c) x(r, c) = u(rng);
            y[r] = u(rng);
        }
        auto m = fit_ols(x, y);
        double residual_sum = 0.0;
        for (std::size_t c = 0; c < 6; ++c) {
            double dot = 0.0;
            for (std::size_t r = 0; r < 30; ++r) dot += (y[r] - m.predict(x.row(r))) * x(r, c);
            CHECK(std::abs(dot) < 1e-10);
        }
        for (std::size_t r = 0; r < 30; ++r) residual_sum += y[r] - m.predict(x.row(r));
        CHECK(std::abs(residual_sum) < 1e-10);
        CHECK(m.r_squared >= 0.0);
        CHECK(m.r_squared <= 1.0);
    }
}

TEST_CASE("ols errors") {
    CHECK_THROWS_AS(fit_ols(Matrix(1, 2), std::vector<double>{1.0}), DegenerateError);
    CHECK_THROWS_AS(fit_ols(Matrix(3, 2), std::vector<double>{1.0, 2.0}), UsageError);
}

TEST_CASE("surrogate_eval rounds categorical groups") {
    auto space = default_space();
    SurrogateModel m;
    m.coefficients.assign(space.encoded_width(), 0.0);
    m.coefficients[0] = 1.0;  // training_method=negative_sampling
    m.coefficients[2] = 10.0;  // training_method=KvsAll
    m.coefficients[12] = 100.0;  // embedding_size
    std::vector<double> p(space.encoded_width(), 0.0);
    p[0] = 0.4;
    p[1] = 0.3;
    p[2] = 0.35;
    p[12] = 0.5;
    CHECK(surrogate_eval(m, p, space) == doctest::Approx(1.0 + 50.0));
    p[2] = 0.9;
    CHECK(surrogate_eval(m, p, space) == doctest::Approx(10.0 + 50.0));
}

TEST_CASE("grouping sums members") {
    SobolIndices idx;
    idx.s1 = {0.1, 0.2, 0.3};
    idx.st = {0.15, 0.25, 0.35};
    idx.s1_conf = idx.st_conf = {0, 0, 0};
    idx.s2 = make_matrix(3, 3, {NAN, 0.01, 0.02, NAN, NAN, 0.04, NAN, NAN, NAN});
    std::vector<std::string> groups = {"g", "h", "g"};
    auto g = group_indices(idx, groups);
    REQUIRE(g.names == std::vector<std::string>{"g", "h"});
    CHECK(g.s1[0] == doctest::Approx(0.4));
    CHECK(g.st[1] == doctest::Approx(0.25));
    CHECK(g.s2(0, 0) == doctest::Approx(0.02));
    CHECK(g.s2(0, 1) == doctest::Approx(0.05));
    CHECK_THROWS_AS(group_indices(idx, std::vector<std::string>{"g"}), UsageError);
}

TEST_CASE("flatten_upper and pearson") {
    auto m = make_matrix(3, 3, {0, 1, 2, 0, 0, 3, 0, 0, 0});
    CHECK(flatten_upper(m) == std::vector<double>{1, 2, 3});
    std::vector<double> u = {1, 2, 3, 4}, v = {-1, -2, -3, -4}, w = {2, 4, 6, 8.5};
    CHECK(pearson(u, u) == doctest::Approx(1.0));
    CHECK(pearson(u, v) == doctest::Approx(-1.0));
    CHECK(pearson(u, w) < 1.0);
    CHECK_THROWS_AS(pearson(u, std::vector<double>{1, 1, 1, 1}), DegenerateError);
    CHECK_THROWS_AS(pearson(u, std::vector<double>{1, 2}), UsageError);
}
