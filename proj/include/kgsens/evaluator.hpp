#pragma once
// Filtered link-prediction evaluation.

#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "kgsens/graph_store.hpp"
#include "kgsens/kge_model.hpp"

namespace kgsens {

struct RankResult {
    Triple triple;
    Slot slot = Slot::object;
    double filtered_rank = 1.0;
    double raw_rank = 1.0;
};

enum class Direction { both, subject, object };
Direction parse_direction(std::string_view name);

struct EvaluationResult {
    double mrr = 0.0;
    double hits1 = 0.0;
    double hits3 = 0.0;
    double hits10 = 0.0;
    std::size_t rank_count = 0;
};

// Ranks from a full candidate score row. Candidates (other than the
// target) that complete a known triple are removed for the filtered rank;
// ties count half: rank = 1 + #greater + #equal/2.
RankResult rank_from_scores(std::span<const double> scores, const Triple& triple, Slot slot,
                            const PositiveSet& positives);

RankResult filtered_rank(const EmbeddingModel& model, const Triple& triple, Slot slot, const PositiveSet& positives);

EvaluationResult evaluate(const EmbeddingModel& model, std::span<const Triple> triples, const PositiveSet& positives,
                          Direction direction = Direction::both, std::vector<RankResult>* ranks = nullptr);

EvaluationResult summarize(std::span<const RankResult> ranks);

// Expected reciprocal rank of a uniformly random permutation: H_n / n.
double random_baseline_mrr(std::size_t entity_count);

// triple names, slot, raw and filtered rank per row.
void write_ranks_csv(std::ostream& out, const KnowledgeGraph& kg, std::span<const RankResult> ranks);

}  // namespace kgsens
