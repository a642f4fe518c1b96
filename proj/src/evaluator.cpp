#include "kgsens/evaluator.hpp"

#include <string>

#include "kgsens/error.hpp"

namespace kgsens {

Direction parse_direction(std::string_view name) {
    if (name == "both") return Direction::both;
    if (name == "subject") return Direction::subject;
    if (name == "object") return Direction::object;
    throw UsageError("unknown evaluation direction '" + std::string(name) + "'");
}

RankResult rank_from_scores(std::span<const double> scores, const Triple& triple, Slot slot,
                            const PositiveSet& positives) {
    const EntityId target = slot == Slot::object ? triple.object : triple.subject;
    const double target_score = scores[target];
    std::size_t greater = 0, equal = 0;
    for (std::size_t x = 0; x < scores.size(); ++x) {
        if (x == target) continue;
        greater += scores[x] > target_score;
        equal += scores[x] == target_score;
    }
    RankResult result;
    result.triple = triple;
    result.slot = slot;
    result.raw_rank = 1.0 + static_cast<double>(greater) + 0.5 * static_cast<double>(equal);

    const auto known = slot == Slot::object ? positives.objects(triple.subject, triple.predicate)
                                            : positives.subjects(triple.predicate, triple.object);
    for (auto x : known) {
        if (x == target) continue;
        greater -= scores[x] > target_score;
        equal -= scores[x] == target_score;
    }
    result.filtered_rank = 1.0 + static_cast<double>(greater) + 0.5 * static_cast<double>(equal);
    return result;
}

RankResult filtered_rank(const EmbeddingModel& model, const Triple& triple, Slot slot, const PositiveSet& positives) {
    const std::size_t n = model.entities.rows();
    if (triple.subject >= n || triple.object >= n || triple.predicate >= model.relations.rows()) {
        throw UsageError("triple ids out of range for the model");
    }
    std::vector<double> scores(n);
    const EntityId anchor = slot == Slot::object ? triple.subject : triple.object;
    QueryView q{model.method, model.dim, model.entities.row(anchor), model.relations.row(triple.predicate), slot};
    score_candidates(q, model.entities, {}, scores);
    return rank_from_scores(scores, triple, slot, positives);
}

EvaluationResult summarize(std::span<const RankResult> ranks) {
    if (ranks.empty()) throw UsageError("evaluation over an empty triple set");
    EvaluationResult r;
    for (const auto& rank : ranks) {
        r.mrr += 1.0 / rank.filtered_rank;
        r.hits1 += rank.filtered_rank <= 1.0;
        r.hits3 += rank.filtered_rank <= 3.0;
        r.hits10 += rank.filtered_rank <= 10.0;
    }
    const double n = static_cast<double>(ranks.size());
    r.mrr /= n;
    r.hits1 /= n;
    r.hits3 /= n;
    r.hits10 /= n;
    r.rank_count = ranks.size();
    return r;
}

EvaluationResult evaluate(const EmbeddingModel& model, std::span<const Triple> triples, const PositiveSet& positives,
                          Direction direction, std::vector<RankResult>* ranks) {
    if (triples.empty()) throw UsageError("evaluation over an empty triple set");
    std::vector<RankResult> local;
    auto& out = ranks ? *ranks : local;
    out.clear();
    out.reserve(triples.size() * 2);
    for (const auto& t : triples) {
        if (direction != Direction::object) out.push_back(filtered_rank(model, t, Slot::subject, positives));
        if (direction != Direction::subject) out.push_back(filtered_rank(model, t, Slot::object, positives));
    }
    return summarize(out);
}

double random_baseline_mrr(std::size_t entity_count) {
    if (entity_count == 0) throw UsageError("random baseline needs at least one entity");
    double harmonic = 0.0;
    for (std::size_t k = entity_count; k >= 1; --k) harmonic += 1.0 / static_cast<double>(k);
    return harmonic / static_cast<double>(entity_count);
}

void write_ranks_csv(std::ostream& out, const KnowledgeGraph& kg, std::span<const RankResult> ranks) {
    out << "subject,relation,object,slot,raw_rank,filtered_rank\n";
    for (const auto& r : ranks) {
        out << kg.entity_name(r.triple.subject) << ',' << kg.relation_name(r.triple.predicate) << ','
            << kg.entity_name(r.triple.object) << ',' << (r.slot == Slot::object ? "object" : "subject") << ','
            << r.raw_rank << ',' << r.filtered_rank << '\n';
    }
}

}  // namespace kgsens
