#pragma once
// Surrogate regression and variance-based (Sobol) sensitivity analysis.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "kgsens/hyperspace.hpp"
#include "kgsens/matrix.hpp"
#include "kgsens/sobol.hpp"

namespace kgsens {

// Indices of the ceil(fraction·n) highest-quality entries, best first;
// ties keep the lower index.
std::vector<std::size_t> top_fraction(std::span<const double> quality, double fraction);

struct SurrogateModel {
    std::vector<double> coefficients;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t training_row_count = 0;
    std::size_t rank = 0;

    double predict(std::span<const double> x) const;
};

// Least squares with an unpenalized intercept. Columns are centred and the
// centred system is solved by complete orthogonal decomposition, so
// rank-deficient inputs get the minimum-norm coefficient vector (constant
// columns get 0).
SurrogateModel fit_ols(const Matrix& x, std::span<const double> y);

// One-hot rounds each categorical group of `point`, then applies the model.
double surrogate_eval(const SurrogateModel& model, std::span<const double> point, const HyperparameterSpace& space);

struct SobolIndices {
    std::vector<double> s1, s1_conf;
    std::vector<double> st, st_conf;
    Matrix s2, s2_conf;  // upper triangle populated, rest NaN
    std::size_t base_n = 0;
    std::size_t dimension() const { return s1.size(); }
};

struct SobolOptions {
    std::size_t resamples = 100;
    double confidence = 0.95;
    std::size_t workers = 1;
};

using ModelFunction = std::function<double(std::span<const double>)>;

// Evaluates `f` on saltelli_design(D, N, second order) and estimates
// first-, second- and total-order indices with bootstrap half-widths.
// Throws DegenerateError when the outputs have zero variance.
SobolIndices sobol_analyze(const ModelFunction& f, std::size_t dimension, std::size_t base_n, std::uint64_t seed,
                           const SobolOptions& options = {});

// Estimation step alone, from outputs already evaluated on `design`.
SobolIndices sobol_indices_from_outputs(const SaltelliDesign& design, std::span<const double> outputs,
                                        std::uint64_t seed, const SobolOptions& options = {});

struct GroupedIndices {
    std::vector<std::string> names;
    std::vector<double> s1;
    std::vector<double> st;
    Matrix s2;  // group x group, upper triangle
};

// `groups[i]` names the group of column i. Groups are ordered by first
// appearance. Grouped s2 sums the member-pair cells; pairs within one group
// land on the diagonal.
GroupedIndices group_indices(const SobolIndices& indices, std::span<const std::string> groups);

// Strict upper triangle in row-major order.
std::vector<double> flatten_upper(const Matrix& m);

// Sample Pearson correlation; throws DegenerateError on zero variance.
double pearson(std::span<const double> u, std::span<const double> v);

}  // namespace kgsens
