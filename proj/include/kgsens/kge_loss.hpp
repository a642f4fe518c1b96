#pragma once

#include <algorithm>
#include <span>
#include <string_view>
#include <vector>

namespace kgsens {

enum class LossKind { bce, kl, margin_ranking };

LossKind parse_loss(std::string_view name);
std::string_view loss_name(LossKind kind);

// Scores grouped into rows (one query each). `row_offsets` holds the start
// of every row plus a final end offset; it may be empty for flat BCE input.
struct ScoreRows {
    std::vector<double> scores;
    std::vector<double> labels;
    std::vector<std::size_t> row_offsets;

    std::size_t row_count() const { return row_offsets.empty() ? 0 : row_offsets.size() - 1; }
    void begin_row() {
        if (row_offsets.empty()) row_offsets.push_back(0);
    }
    void end_row() { row_offsets.push_back(std::max(scores.size(), labels.size())); }
};

// bce: mean over all entries of -[y log σ(s) + (1-y) log(1-σ(s))].
// kl: mean over rows of cross-entropy between softmax(row) and the
//     normalized label row.
// margin_ranking: mean over (positive, negative) pairs within a row of
//     max(0, margin - s_pos + s_neg); each row must hold exactly one
//     positive and at least one negative.
// When `grad` is non-empty it receives dLoss/dscore per entry.
double compute_loss(const ScoreRows& rows, LossKind kind, double margin, std::span<double> grad = {});

}  // namespace kgsens
