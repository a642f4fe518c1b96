#pragma once
// Embedding models and their scoring functions.
//
// All four scorers are written against a query/candidate split: for the
// object slot the query is built from (subject, relation) and every
// candidate entity is scored against it; for the subject slot the query
// comes from (relation, object). Forward and backward passes share that
// structure so one-vs-all scoring costs O(n·d) after an O(d) or O(d²) query.

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "kgsens/graph_store.hpp"
#include "kgsens/matrix.hpp"

namespace kgsens {

enum class Method { transe, distmult, complex, rescal };
enum class Slot { subject, object };
enum class InitScheme { normal, uniform, xavier_normal, xavier_uniform };

Method parse_method(std::string_view name);
std::string_view method_name(Method m);
InitScheme parse_init(std::string_view name);

struct InitParams {
    double normal_std = 1.0;
    double uniform_lower = -1.0;
};

// Deterministic in `rng` state. Xavier variants use gain 1 with
// fan_in = cols, fan_out = rows.
Matrix init_weights(InitScheme scheme, std::size_t rows, std::size_t cols, const InitParams& params,
                    std::mt19937_64& rng);
Matrix init_weights(InitScheme scheme, std::size_t rows, std::size_t cols, const InitParams& params,
                    std::uint64_t seed);

struct EmbeddingModel {
    Method method = Method::distmult;
    std::size_t dim = 0;
    Matrix entities;   // |V| x d
    Matrix relations;  // |R| x d, or |R| x d*d for RESCAL

    static EmbeddingModel create(Method method, std::size_t entity_count, std::size_t relation_count,
                                 std::size_t dim, InitScheme scheme, const InitParams& params,
                                 std::mt19937_64& rng);

    std::size_t relation_width() const { return method == Method::rescal ? dim * dim : dim; }
    bool all_finite() const;
};

double score(const EmbeddingModel& model, EntityId s, RelationId p, EntityId o);

// Vectors are raw parameter rows, possibly with dropout already applied.
// `anchor` is the entity that is *not* being predicted.
struct QueryView {
    Method method;
    std::size_t dim;
    std::span<const double> anchor;
    std::span<const double> relation;
    Slot slot;  // slot whose candidates get scored
};

// Scores candidates (all entities when `candidates` is empty) into `out`.
void score_candidates(const QueryView& q, const Matrix& entities, std::span<const EntityId> candidates,
                      std::span<double> out);

struct QueryGradient {
    std::span<double> anchor;
    std::span<double> relation;
};

// Accumulates d(sum_k dscores[k]·score_k) into the anchor/relation
// gradients and into the candidate rows of `entity_grad`.
void backward_candidates(const QueryView& q, const Matrix& entities, std::span<const EntityId> candidates,
                         std::span<const double> dscores, const QueryGradient& grad, Matrix& entity_grad);

}  // namespace kgsens
