#include "kgsens/kge_loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kgsens/error.hpp"

namespace kgsens {

namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

LossKind parse_loss(std::string_view name) {
    if (name == "bce") return LossKind::bce;
    if (name == "kl") return LossKind::kl;
    if (name == "margin_ranking") return LossKind::margin_ranking;
    throw UsageError("unknown loss '" + std::string(name) + "'");
}

std::string_view loss_name(LossKind kind) {
    switch (kind) {
        case LossKind::bce: return "bce";
        case LossKind::kl: return "kl";
        case LossKind::margin_ranking: return "margin_ranking";
    }
    return "bce";
}

double compute_loss(const ScoreRows& rows, LossKind kind, double margin, std::span<double> grad) {
    const auto& s = rows.scores;
    const auto& y = rows.labels;
    if (s.size() != y.size()) throw UsageError("scores and labels differ in length");
    if (s.empty()) throw UsageError("loss over an empty score set");
    const bool want_grad = !grad.empty();
    if (want_grad && grad.size() != s.size()) throw UsageError("gradient buffer has the wrong length");
    for (double label : y) {
        if (label != 0.0 && label != 1.0) throw UsageError("labels must be 0 or 1");
    }

    switch (kind) {
        case LossKind::bce: {
            const double n = static_cast<double>(s.size());
            double total = 0.0;
            for (std::size_t i = 0; i < s.size(); ++i) {
                total += y[i] * softplus(-s[i]) + (1.0 - y[i]) * softplus(s[i]);
                if (want_grad) grad[i] = (sigmoid(s[i]) - y[i]) / n;
            }
            return total / n;
        }
        case LossKind::kl: {
            if (rows.row_count() == 0) throw UsageError("kl loss needs row-structured scores");
            const double n_rows = static_cast<double>(rows.row_count());
            double total = 0.0;
            for (std::size_t r = 0; r < rows.row_count(); ++r) {
                const std::size_t begin = rows.row_offsets[r], end = rows.row_offsets[r + 1];
                if (begin == end) throw UsageError("kl loss over an empty row");
                double label_sum = 0.0;
                for (std::size_t i = begin; i < end; ++i) label_sum += y[i];
                if (label_sum == 0.0) throw UsageError("kl loss row without a positive label");
                const double peak = *std::max_element(s.begin() + static_cast<std::ptrdiff_t>(begin),
                                                      s.begin() + static_cast<std::ptrdiff_t>(end));
                double z = 0.0;
                for (std::size_t i = begin; i < end; ++i) z += std::exp(s[i] - peak);
                const double log_z = peak + std::log(z);
                for (std::size_t i = begin; i < end; ++i) {
                    const double target = y[i] / label_sum;
                    total += target * (log_z - s[i]);
                    if (want_grad) grad[i] = (std::exp(s[i] - log_z) - target) / n_rows;
                }
            }
            return total / n_rows;
        }
        case LossKind::margin_ranking: {
            if (rows.row_count() == 0) throw UsageError("margin ranking needs paired positive/negative rows");
            std::size_t pairs = 0;
            for (std::size_t r = 0; r < rows.row_count(); ++r) {
                const std::size_t begin = rows.row_offsets[r], end = rows.row_offsets[r + 1];
                const auto positives = std::count(y.begin() + static_cast<std::ptrdiff_t>(begin),
                                                  y.begin() + static_cast<std::ptrdiff_t>(end), 1.0);
                const auto negatives = static_cast<std::ptrdiff_t>(end - begin) - positives;
                if (positives != 1 || negatives < 1) {
                    throw UsageError("margin ranking needs exactly one positive and at least one negative per row");
                }
                pairs += static_cast<std::size_t>(negatives);
            }
            if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
            const double n_pairs = static_cast<double>(pairs);
            double total = 0.0;
            for (std::size_t r = 0; r < rows.row_count(); ++r) {
                const std::size_t begin = rows.row_offsets[r], end = rows.row_offsets[r + 1];
                std::size_t pos = begin;
                while (y[pos] != 1.0) ++pos;
                for (std::size_t i = begin; i < end; ++i) {
                    if (i == pos) continue;
                    const double hinge = margin - s[pos] + s[i];
                    if (hinge > 0.0) {
                        total += hinge;
                        if (want_grad) {
                            grad[pos] -= 1.0 / n_pairs;
                            grad[i] += 1.0 / n_pairs;
                        }
                    }
                }
            }
            return total / n_pairs;
        }
    }
    return 0.0;
}

}  // namespace kgsens
