#include "kgsens/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include <Eigen/Dense>

#include "kgsens/error.hpp"

namespace kgsens {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Per-base-row outputs split by Saltelli block.
struct BlockOutputs {
    std::size_t n = 0, d = 0;
    std::vector<double> a, b;
    std::vector<double> ab;  // n x d
    std::vector<double> ba;  // n x d
};

struct Estimates {
    std::vector<double> s1, st;
    Matrix s2;
};

Estimates estimate(const BlockOutputs& y, std::span<const std::size_t> rows) {
    const std::size_t d = y.d;
    const double m = static_cast<double>(rows.size());
    // Normalizer: population variance of f(A) ∪ f(B).
    double mean = 0.0;
    for (auto j : rows) mean += y.a[j] + y.b[j];
    mean /= 2.0 * m;
    double variance = 0.0;
    for (auto j : rows) {
        variance += (y.a[j] - mean) * (y.a[j] - mean) + (y.b[j] - mean) * (y.b[j] - mean);
    }
    variance /= 2.0 * m;

    Estimates e;
    e.s1.assign(d, kNaN);
    e.st.assign(d, kNaN);
    e.s2 = Matrix(d, d, kNaN);
    if (!(variance > 0.0)) return e;
    for (std::size_t i = 0; i < d; ++i) {
        double first = 0.0, total = 0.0;
        for (auto j : rows) {
            const double fab = y.ab[j * d + i];
            first += y.b[j] * (fab - y.a[j]);
            total += (y.a[j] - fab) * (y.a[j] - fab);
        }
        e.s1[i] = first / m / variance;
        e.st[i] = 0.5 * total / m / variance;
    }
    if (!y.ba.empty()) {
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t k = i + 1; k < d; ++k) {
                double joint = 0.0;
                for (auto j : rows) joint += y.ba[j * d + i] * y.ab[j * d + k] - y.a[j] * y.b[j];
                e.s2(i, k) = joint / m / variance - e.s1[i] - e.s1[k];
            }
        }
    }
    return e;
}

double percentile(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double half_width(const std::vector<double>& samples, double confidence) {
    const double tail = (1.0 - confidence) / 2.0;
    return 0.5 * (percentile(samples, 1.0 - tail) - percentile(samples, tail));
}

}  // namespace

std::vector<std::size_t> top_fraction(std::span<const double> quality, double fraction) {
    if (quality.empty()) throw UsageError("top_fraction over an empty trial list");
    if (!(fraction > 0.0 && fraction <= 1.0)) throw UsageError("fraction must lie in (0, 1]");
    std::vector<std::size_t> order(quality.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return quality[a] > quality[b]; });
    // Guard the ceiling against products like 0.05·100 = 5.000000000000001.
    const double raw = fraction * static_cast<double>(quality.size());
    auto keep = static_cast<std::size_t>(std::ceil(raw - 1e-9 * raw));
    keep = std::clamp<std::size_t>(keep, 1, quality.size());
    order.resize(keep);
    return order;
}

double SurrogateModel::predict(std::span<const double> x) const {
    if (x.size() != coefficients.size()) throw UsageError("surrogate input has the wrong width");
    double y = intercept;
    for (std::size_t i = 0; i < x.size(); ++i) y += coefficients[i] * x[i];
    return y;
}

SurrogateModel fit_ols(const Matrix& x, std::span<const double> y) {
    const std::size_t n = x.rows(), p = x.cols();
    if (n < 2) throw DegenerateError("least squares needs at least 2 rows");
    if (y.size() != n) throw UsageError("response length does not match the design rows");

    Eigen::MatrixXd xc(n, p);
    Eigen::VectorXd yc(n);
    std::vector<double> x_mean(p, 0.0);
    double y_mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    for (std::size_t c = 0; c < p; ++c) {
        for (std::size_t r = 0; r < n; ++r) x_mean[c] += x(r, c);
        x_mean[c] /= static_cast<double>(n);
    }
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < p; ++c) xc(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = x(r, c) - x_mean[c];
        yc(static_cast<Eigen::Index>(r)) = y[r] - y_mean;
    }

    SurrogateModel model;
    model.training_row_count = n;
    model.coefficients.assign(p, 0.0);
    if (p > 0) {
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(xc);
        // Threshold relative to the largest pivot, scaled by problem size.
        cod.setThreshold(std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(n, p)));
        model.rank = static_cast<std::size_t>(cod.rank());
        Eigen::VectorXd beta = cod.solve(yc);
        for (std::size_t c = 0; c < p; ++c) model.coefficients[c] = beta(static_cast<Eigen::Index>(c));
    }
    model.intercept = y_mean;
    for (std::size_t c = 0; c < p; ++c) model.intercept -= model.coefficients[c] * x_mean[c];

    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const double fitted = model.predict(x.row(r));
        ss_res += (y[r] - fitted) * (y[r] - fitted);
        ss_tot += (y[r] - y_mean) * (y[r] - y_mean);
    }
    model.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return model;
}

double surrogate_eval(const SurrogateModel& model, std::span<const double> point, const HyperparameterSpace& space) {
    std::vector<double> rounded(point.begin(), point.end());
    round_dummies(rounded, space);
    return model.predict(rounded);
}

SobolIndices sobol_indices_from_outputs(const SaltelliDesign& design, std::span<const double> outputs,
                                        std::uint64_t seed, const SobolOptions& options) {
    const std::size_t n = design.base_n, d = design.dimension;
    if (outputs.size() != design.rows.rows()) throw UsageError("output count does not match the design");
    if (!(options.confidence > 0.0 && options.confidence < 1.0)) throw UsageError("confidence must lie in (0, 1)");

    // Standardize so the cross-product estimators are not dominated by the
    // output mean.
    const double mean = std::accumulate(outputs.begin(), outputs.end(), 0.0) / static_cast<double>(outputs.size());
    double sd = 0.0;
    for (double v : outputs) sd += (v - mean) * (v - mean);
    sd = std::sqrt(sd / static_cast<double>(outputs.size()));
    if (!(sd > 0.0) || !std::isfinite(sd)) throw DegenerateError("model output has zero variance; indices undefined");

    BlockOutputs y;
    y.n = n;
    y.d = d;
    y.a.resize(n);
    y.b.resize(n);
    y.ab.resize(n * d);
    if (design.second_order) y.ba.resize(n * d);
    auto at = [&](std::size_t row) { return (outputs[row] - mean) / sd; };
    for (std::size_t j = 0; j < n; ++j) {
        y.a[j] = at(design.row_of(j, SaltelliBlock::a));
        y.b[j] = at(design.row_of(j, SaltelliBlock::b));
        for (std::size_t i = 0; i < d; ++i) {
            y.ab[j * d + i] = at(design.row_of(j, SaltelliBlock::ab, i));
            if (design.second_order) y.ba[j * d + i] = at(design.row_of(j, SaltelliBlock::ba, i));
        }
    }

    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    auto point = estimate(y, all);
    for (double v : point.s1) {
        if (!std::isfinite(v)) throw DegenerateError("f(A) ∪ f(B) has zero variance; indices undefined");
    }

    SobolIndices out;
    out.base_n = n;
    out.s1 = point.s1;
    out.st = point.st;
    out.s2 = point.s2;
    out.s1_conf.assign(d, 0.0);
    out.st_conf.assign(d, 0.0);
    out.s2_conf = Matrix(d, d, kNaN);

    if (options.resamples > 0) {
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::vector<std::vector<double>> s1_samples(d), st_samples(d), s2_samples(d * d);
        std::vector<std::size_t> rows(n);
        for (std::size_t r = 0; r < options.resamples; ++r) {
            for (auto& row : rows) row = pick(rng);
            auto e = estimate(y, rows);
            for (std::size_t i = 0; i < d; ++i) {
                if (std::isfinite(e.s1[i])) s1_samples[i].push_back(e.s1[i]);
                if (std::isfinite(e.st[i])) st_samples[i].push_back(e.st[i]);
                if (design.second_order) {
                    for (std::size_t k = i + 1; k < d; ++k) {
                        if (std::isfinite(e.s2(i, k))) s2_samples[i * d + k].push_back(e.s2(i, k));
                    }
                }
            }
        }
        for (std::size_t i = 0; i < d; ++i) {
            if (!s1_samples[i].empty()) out.s1_conf[i] = half_width(s1_samples[i], options.confidence);
            if (!st_samples[i].empty()) out.st_conf[i] = half_width(st_samples[i], options.confidence);
            for (std::size_t k = i + 1; k < d; ++k) {
                if (!s2_samples[i * d + k].empty()) out.s2_conf(i, k) = half_width(s2_samples[i * d + k], options.confidence);
            }
        }
    }
    return out;
}

SobolIndices sobol_analyze(const ModelFunction& f, std::size_t dimension, std::size_t base_n, std::uint64_t seed,
                           const SobolOptions& options) {
    const auto design = saltelli_design(dimension, base_n, true);
    const std::size_t rows = design.rows.rows();
    std::vector<double> outputs(rows);
    const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, rows));
    if (workers == 1) {
        for (std::size_t r = 0; r < rows; ++r) outputs[r] = f(design.rows.row(r));
    } else {
        // Each worker owns a contiguous block, so results do not depend on
        // scheduling.
        std::vector<std::jthread> pool;
        const std::size_t chunk = (rows + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                const std::size_t begin = w * chunk, end = std::min(rows, begin + chunk);
                for (std::size_t r = begin; r < end; ++r) outputs[r] = f(design.rows.row(r));
            });
        }
    }
    return sobol_indices_from_outputs(design, outputs, seed, options);
}

GroupedIndices group_indices(const SobolIndices& indices, std::span<const std::string> groups) {
    const std::size_t d = indices.dimension();
    if (groups.size() != d) throw UsageError("every column needs exactly one group");
    GroupedIndices out;
    std::vector<std::size_t> member(d);
    for (std::size_t i = 0; i < d; ++i) {
        if (groups[i].empty()) throw UsageError("column " + std::to_string(i) + " has no group");
        auto it = std::find(out.names.begin(), out.names.end(), groups[i]);
        member[i] = static_cast<std::size_t>(it - out.names.begin());
        if (it == out.names.end()) out.names.push_back(groups[i]);
    }
    const std::size_t g = out.names.size();
    out.s1.assign(g, 0.0);
    out.st.assign(g, 0.0);
    out.s2 = Matrix(g, g, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        out.s1[member[i]] += indices.s1[i];
        out.st[member[i]] += indices.st[i];
        for (std::size_t k = i + 1; k < d; ++k) {
            const double cell = indices.s2.rows() == d ? indices.s2(i, k) : 0.0;
            if (!std::isfinite(cell)) continue;
            const auto a = std::min(member[i], member[k]), b = std::max(member[i], member[k]);
            out.s2(a, b) += cell;
        }
    }
    return out;
}

std::vector<double> flatten_upper(const Matrix& m) {
    if (m.rows() != m.cols()) throw UsageError("flatten_upper needs a square matrix");
    std::vector<double> out;
    out.reserve(m.rows() * (m.rows() - (m.rows() ? 1 : 0)) / 2);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t k = i + 1; k < m.cols(); ++k) out.push_back(m(i, k));
    }
    return out;
}

double pearson(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw UsageError("pearson needs equal-length vectors");
    if (u.size() < 2) throw UsageError("pearson needs at least 2 values");
    const double n = static_cast<double>(u.size());
    const double mu = std::accumulate(u.begin(), u.end(), 0.0) / n;
    const double mv = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double suv = 0.0, suu = 0.0, svv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        suv += (u[i] - mu) * (v[i] - mv);
        suu += (u[i] - mu) * (u[i] - mu);
        svv += (v[i] - mv) * (v[i] - mv);
    }
    if (!(suu > 0.0) || !(svv > 0.0)) throw DegenerateError("pearson correlation of a zero-variance vector");
    return std::clamp(suv / std::sqrt(suu * svv), -1.0, 1.0);
}

}  // namespace kgsens
