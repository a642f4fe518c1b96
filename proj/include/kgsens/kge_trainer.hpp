#pragma once
// Desk-scale KGE training: negative sampling, 1vsAll and KvsAll batches,
// analytic gradients, Adam/Adagrad, and a plateau learning-rate schedule.

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgsens/evaluator.hpp"
#include "kgsens/graph_store.hpp"
#include "kgsens/hyperspace.hpp"
#include "kgsens/kge_loss.hpp"
#include "kgsens/kge_model.hpp"

namespace kgsens {

enum class TrainingMethod { negative_sampling, one_vs_all, k_vs_all };
enum class OptimizerKind { adam, adagrad };

TrainingMethod parse_training_method(std::string_view name);
std::string_view training_method_name(TrainingMethod m);
OptimizerKind parse_optimizer(std::string_view name);

// Values that are fixed rather than searched.
struct TrainingConstants {
    std::size_t negatives = 50;
    std::size_t max_epochs = 100;
    std::size_t valid_every = 5;
    double margin = 1.0;
    double lr_decay = 0.95;
    double improvement_tolerance = 1e-4;
    // Attempts to redraw a corruption that happens to be a train triple.
    std::size_t max_resample = 10;
    Direction direction = Direction::both;
};

struct TrainingSettings {
    Method method = Method::distmult;
    TrainingMethod training = TrainingMethod::k_vs_all;
    LossKind loss = LossKind::kl;
    OptimizerKind optimizer = OptimizerKind::adam;
    InitScheme init = InitScheme::xavier_normal;
    InitParams init_params;
    std::size_t dim = 64;
    std::size_t batch_size = 128;
    double learning_rate = 0.01;
    std::size_t lr_patience = 5;
    double regularization_weight = 0.0;
    double dropout = 0.0;
    TrainingConstants constants;
};

// ComplEx embedding sizes are rounded up to the next even number.
TrainingSettings settings_from_config(const TrialConfig& config, const HyperparameterSpace& space,
                                      const TrainingConstants& constants);

struct TrainState {
    // Adam moments (Adagrad only uses the second accumulators).
    Matrix entity_m, entity_v, relation_m, relation_v;
    std::uint64_t step = 0;
    double learning_rate = 0.0;
    std::size_t epochs_since_improvement = 0;
    double best_valid_mrr = -std::numeric_limits<double>::infinity();
    std::size_t epoch = 0;

    static TrainState fresh(const EmbeddingModel& model, double learning_rate);
};

// Plateau rule: an improvement of more than `tolerance` over the best
// validation MRR resets the counter, otherwise it grows; once it exceeds
// `patience` the rate is multiplied by `decay` and the counter resets.
void lr_step(TrainState& state, double current_valid_mrr, std::size_t patience, double decay = 0.95,
             double tolerance = 1e-4);

// One scored query: the anchor entity and relation are fixed, the other
// slot is filled with each candidate (or every entity).
struct Query {
    EntityId anchor = 0;
    RelationId relation = 0;
    Slot slot = Slot::object;
    bool all_entities = false;
    std::vector<EntityId> candidates;
};

struct PreparedBatch {
    std::vector<Query> queries;
    ScoreRows rows;  // scores are filled by compute_loss_and_gradient
};

struct Gradient {
    Matrix entities;
    Matrix relations;
    std::vector<EntityId> touched_entities;
    std::vector<RelationId> touched_relations;

    static Gradient zeros_like(const EmbeddingModel& model);
    void clear();
};

struct DropoutContext {
    double rate = 0.0;
    std::mt19937_64* rng = nullptr;
};

// Data loss plus `regularization_weight` times the squared norm of every
// parameter row touched by the batch. Gradient rows are accumulated into
// `grad` (which must be clear on entry).
double compute_loss_and_gradient(const EmbeddingModel& model, PreparedBatch& batch, LossKind loss, double margin,
                                 double regularization_weight, const DropoutContext& dropout, Gradient& grad);

// Same objective without gradients or dropout; used by finite-difference
// checks.
double compute_loss_only(const EmbeddingModel& model, PreparedBatch batch, LossKind loss, double margin,
                         double regularization_weight);

void optimizer_step(EmbeddingModel& model, TrainState& state, const Gradient& grad, OptimizerKind optimizer);

class Trainer {
public:
    Trainer(const KnowledgeGraph& kg, const TrainingSettings& settings, std::uint64_t seed);

    const TrainingSettings& settings() const { return settings_; }
    EmbeddingModel initial_model();

    // Batch over example indices: train triples for negative sampling and
    // 1vsAll, (anchor, relation) keys for KvsAll.
    PreparedBatch prepare_batch(std::span<const std::size_t> examples);
    std::size_t example_count() const;

    // Shuffles, runs every batch and returns the mean batch loss. Returns
    // NaN as soon as a batch loss or parameter turns non-finite.
    double train_epoch(EmbeddingModel& model, TrainState& state);

private:
    struct KvsAllKey {
        EntityId anchor;
        RelationId relation;
        Slot slot;
        std::vector<EntityId> positives;
    };

    const KnowledgeGraph& kg_;
    TrainingSettings settings_;
    std::mt19937_64 rng_;
    std::unordered_set<std::uint64_t> train_set_;
    std::vector<KvsAllKey> keys_;
    Gradient grad_;
};

struct TrainOutcome {
    EmbeddingModel model;
    bool completed = false;
    std::string failure_reason;
    double valid_mrr = 0.0;
    EvaluationResult test;
    std::size_t epochs_run = 0;
    double seconds = 0.0;
};

// Full trial: train up to max_epochs, validate every valid_every epochs,
// keep the best-validation parameters, then evaluate the test split.
// Failures are reported in the outcome rather than thrown.
TrainOutcome train(const KnowledgeGraph& kg, const PositiveSet& positives, const TrainingSettings& settings,
                   std::uint64_t seed);

}  // namespace kgsens
