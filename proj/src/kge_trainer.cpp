#include "kgsens/kge_trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>

#include "kgsens/error.hpp"

namespace kgsens {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEpsilon = 1e-8;
constexpr double kAdagradEpsilon = 1e-10;

void mark(std::vector<std::uint32_t>& touched, std::vector<char>& seen, std::uint32_t id) {
    if (!seen[id]) {
        seen[id] = 1;
        touched.push_back(id);
    }
}

std::size_t query_width(const Query& q, std::size_t entity_count) {
    return q.all_entities ? entity_count : q.candidates.size();
}

std::span<const EntityId> candidate_span(const Query& q) {
    if (q.all_entities) return {};
    return q.candidates;
}

// Copies a parameter row, applying an inverted-dropout mask when active.
void load_row(std::span<const double> src, std::span<double> dst, std::span<double> mask, const DropoutContext& dropout) {
    if (dropout.rate <= 0.0 || dropout.rng == nullptr) {
        std::copy(src.begin(), src.end(), dst.begin());
        return;
    }
    std::bernoulli_distribution keep(1.0 - dropout.rate);
    const double scale = 1.0 / (1.0 - dropout.rate);
    for (std::size_t k = 0; k < src.size(); ++k) {
        mask[k] = keep(*dropout.rng) ? scale : 0.0;
        dst[k] = src[k] * mask[k];
    }
}

double forward_backward(const EmbeddingModel& model, PreparedBatch& batch, LossKind loss, double margin,
                        double regularization_weight, const DropoutContext& dropout, Gradient* grad) {
    const std::size_t n = model.entities.rows();
    const std::size_t d = model.dim;
    const std::size_t rw = model.relation_width();
    const bool use_dropout = dropout.rate > 0.0 && dropout.rng != nullptr;

    std::size_t total = 0;
    for (const auto& q : batch.queries) total += query_width(q, n);
    if (batch.rows.labels.size() != total) throw UsageError("batch labels do not match its queries");
    batch.rows.scores.assign(total, 0.0);

    // Per-query dropped-out rows are kept so backward uses the same masks.
    std::vector<double> anchors(use_dropout ? batch.queries.size() * d : 0);
    std::vector<double> anchor_masks(anchors.size());
    std::vector<double> relations(use_dropout ? batch.queries.size() * rw : 0);
    std::vector<double> relation_masks(relations.size());

    auto anchor_row = [&](std::size_t qi) -> std::span<const double> {
        if (use_dropout) return std::span<const double>(anchors).subspan(qi * d, d);
        return model.entities.row(batch.queries[qi].anchor);
    };
    auto relation_row = [&](std::size_t qi) -> std::span<const double> {
        if (use_dropout) return std::span<const double>(relations).subspan(qi * rw, rw);
        return model.relations.row(batch.queries[qi].relation);
    };

    std::size_t offset = 0;
    for (std::size_t qi = 0; qi < batch.queries.size(); ++qi) {
        const auto& q = batch.queries[qi];
        if (use_dropout) {
            load_row(model.entities.row(q.anchor), std::span<double>(anchors).subspan(qi * d, d),
                     std::span<double>(anchor_masks).subspan(qi * d, d), dropout);
            load_row(model.relations.row(q.relation), std::span<double>(relations).subspan(qi * rw, rw),
                     std::span<double>(relation_masks).subspan(qi * rw, rw), dropout);
        }
        const std::size_t width = query_width(q, n);
        QueryView view{model.method, d, anchor_row(qi), relation_row(qi), q.slot};
        score_candidates(view, model.entities, candidate_span(q),
                         std::span<double>(batch.rows.scores).subspan(offset, width));
        offset += width;
    }

    std::vector<double> dscores(grad ? total : 0);
    double value = compute_loss(batch.rows, loss, margin, dscores);
    if (!std::isfinite(value)) return value;

    std::vector<char> entity_seen(n, 0), relation_seen(model.relations.rows(), 0);
    std::vector<std::uint32_t> touched_entities, touched_relations;
    std::vector<double> g_anchor(d), g_relation(rw);
    offset = 0;
    for (std::size_t qi = 0; qi < batch.queries.size(); ++qi) {
        const auto& q = batch.queries[qi];
        const std::size_t width = query_width(q, n);
        mark(touched_entities, entity_seen, q.anchor);
        mark(touched_relations, relation_seen, q.relation);
        if (q.all_entities) {
            for (EntityId x = 0; x < n; ++x) mark(touched_entities, entity_seen, x);
        } else {
            for (auto x : q.candidates) mark(touched_entities, entity_seen, x);
        }
        if (grad) {
            std::fill(g_anchor.begin(), g_anchor.end(), 0.0);
            std::fill(g_relation.begin(), g_relation.end(), 0.0);
            QueryView view{model.method, d, anchor_row(qi), relation_row(qi), q.slot};
            backward_candidates(view, model.entities, candidate_span(q),
                                std::span<const double>(dscores).subspan(offset, width), {g_anchor, g_relation},
                                grad->entities);
            auto ga = grad->entities.row(q.anchor);
            auto gr = grad->relations.row(q.relation);
            for (std::size_t k = 0; k < d; ++k) ga[k] += use_dropout ? g_anchor[k] * anchor_masks[qi * d + k] : g_anchor[k];
            for (std::size_t k = 0; k < rw; ++k) {
                gr[k] += use_dropout ? g_relation[k] * relation_masks[qi * rw + k] : g_relation[k];
            }
        }
        offset += width;
    }

    if (regularization_weight > 0.0) {
        double penalty = 0.0;
        for (auto e : touched_entities) {
            auto row = model.entities.row(e);
            auto grow = grad ? grad->entities.row(e) : std::span<double>{};
            for (std::size_t k = 0; k < row.size(); ++k) {
                penalty += row[k] * row[k];
                if (grad) grow[k] += 2.0 * regularization_weight * row[k];
            }
        }
        for (auto r : touched_relations) {
            auto row = model.relations.row(r);
            auto grow = grad ? grad->relations.row(r) : std::span<double>{};
            for (std::size_t k = 0; k < row.size(); ++k) {
                penalty += row[k] * row[k];
                if (grad) grow[k] += 2.0 * regularization_weight * row[k];
            }
        }
        value += regularization_weight * penalty;
    }
    if (grad) {
        grad->touched_entities = std::move(touched_entities);
        grad->touched_relations = std::move(touched_relations);
    }
    return value;
}

}  // namespace

TrainingMethod parse_training_method(std::string_view name) {
    if (name == "negative_sampling") return TrainingMethod::negative_sampling;
    if (name == "1vsAll") return TrainingMethod::one_vs_all;
    if (name == "KvsAll") return TrainingMethod::k_vs_all;
    throw UsageError("unknown training method '" + std::string(name) + "'");
}

std::string_view training_method_name(TrainingMethod m) {
    switch (m) {
        case TrainingMethod::negative_sampling: return "negative_sampling";
        case TrainingMethod::one_vs_all: return "1vsAll";
        case TrainingMethod::k_vs_all: return "KvsAll";
    }
    return "negative_sampling";
}

OptimizerKind parse_optimizer(std::string_view name) {
    if (name == "adam") return OptimizerKind::adam;
    if (name == "adagrad") return OptimizerKind::adagrad;
    throw UsageError("unknown optimizer '" + std::string(name) + "'");
}

TrainingSettings settings_from_config(const TrialConfig& config, const HyperparameterSpace& space,
                                      const TrainingConstants& constants) {
    TrainingSettings s;
    s.method = parse_method(config.method);
    s.training = parse_training_method(config.level(space, "training_method"));
    s.loss = parse_loss(config.level(space, "loss"));
    s.optimizer = parse_optimizer(config.level(space, "optimizer"));
    s.init = parse_init(config.level(space, "weight_init"));
    s.init_params.normal_std = config.number(space, "init_normal_std");
    s.init_params.uniform_lower = config.number(space, "init_uniform_lower");
    s.dim = static_cast<std::size_t>(config.number(space, "embedding_size"));
    if (s.method == Method::complex && s.dim % 2 != 0) ++s.dim;
    s.batch_size = static_cast<std::size_t>(config.number(space, "batch_size"));
    s.learning_rate = config.number(space, "learning_rate");
    s.lr_patience = static_cast<std::size_t>(config.number(space, "lr_patience"));
    s.regularization_weight = config.number(space, "regularization_weight");
    s.dropout = config.number(space, "dropout");
    s.constants = constants;
    return s;
}

TrainState TrainState::fresh(const EmbeddingModel& model, double learning_rate) {
    TrainState s;
    s.entity_m = Matrix(model.entities.rows(), model.entities.cols());
    s.entity_v = s.entity_m;
    s.relation_m = Matrix(model.relations.rows(), model.relations.cols());
    s.relation_v = s.relation_m;
    s.learning_rate = learning_rate;
    return s;
}

void lr_step(TrainState& state, double current_valid_mrr, std::size_t patience, double decay, double tolerance) {
    if (current_valid_mrr > state.best_valid_mrr + tolerance) {
        state.best_valid_mrr = current_valid_mrr;
        state.epochs_since_improvement = 0;
        return;
    }
    ++state.epochs_since_improvement;
    if (state.epochs_since_improvement > patience) {
        state.learning_rate *= decay;
        state.epochs_since_improvement = 0;
    }
}

Gradient Gradient::zeros_like(const EmbeddingModel& model) {
    Gradient g;
    g.entities = Matrix(model.entities.rows(), model.entities.cols());
    g.relations = Matrix(model.relations.rows(), model.relations.cols());
    return g;
}

void Gradient::clear() {
    for (auto e : touched_entities) std::ranges::fill(entities.row(e), 0.0);
    for (auto r : touched_relations) std::ranges::fill(relations.row(r), 0.0);
    touched_entities.clear();
    touched_relations.clear();
}

double compute_loss_and_gradient(const EmbeddingModel& model, PreparedBatch& batch, LossKind loss, double margin,
                                 double regularization_weight, const DropoutContext& dropout, Gradient& grad) {
    return forward_backward(model, batch, loss, margin, regularization_weight, dropout, &grad);
}

double compute_loss_only(const EmbeddingModel& model, PreparedBatch batch, LossKind loss, double margin,
                         double regularization_weight) {
    return forward_backward(model, batch, loss, margin, regularization_weight, {}, nullptr);
}

void optimizer_step(EmbeddingModel& model, TrainState& state, const Gradient& grad, OptimizerKind optimizer) {
    ++state.step;
    const double lr = state.learning_rate;
    auto update = [&](std::span<double> param, std::span<const double> g, std::span<double> m, std::span<double> v) {
        if (optimizer == OptimizerKind::adam) {
            const double t = static_cast<double>(state.step);
            const double c1 = 1.0 - std::pow(kAdamBeta1, t);
            const double c2 = 1.0 - std::pow(kAdamBeta2, t);
            for (std::size_t k = 0; k < param.size(); ++k) {
                m[k] = kAdamBeta1 * m[k] + (1.0 - kAdamBeta1) * g[k];
                v[k] = kAdamBeta2 * v[k] + (1.0 - kAdamBeta2) * g[k] * g[k];
                param[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + kAdamEpsilon);
            }
        } else {
            for (std::size_t k = 0; k < param.size(); ++k) {
                v[k] += g[k] * g[k];
                param[k] -= lr * g[k] / (std::sqrt(v[k]) + kAdagradEpsilon);
            }
        }
    };
    for (auto e : grad.touched_entities) {
        update(model.entities.row(e), grad.entities.row(e), state.entity_m.row(e), state.entity_v.row(e));
    }
    for (auto r : grad.touched_relations) {
        update(model.relations.row(r), grad.relations.row(r), state.relation_m.row(r), state.relation_v.row(r));
    }
}

Trainer::Trainer(const KnowledgeGraph& kg, const TrainingSettings& settings, std::uint64_t seed)
    : kg_(kg), settings_(settings), rng_(seed) {
    if (settings_.batch_size == 0) throw UsageError("batch size must be positive");
    if (settings_.dropout < 0.0 || settings_.dropout >= 1.0) throw UsageError("dropout must lie in [0, 1)");
    if (settings_.training != TrainingMethod::negative_sampling && settings_.loss == LossKind::margin_ranking) {
        throw UsageError("margin ranking loss needs negative sampling");
    }
    train_set_.reserve(kg.train().size() * 2);
    for (const auto& t : kg.train()) train_set_.insert(pack_triple(t));
    if (settings_.training == TrainingMethod::k_vs_all) {
        std::map<std::pair<std::uint64_t, int>, std::size_t> index;
        for (const auto& t : kg.train()) {
            for (Slot slot : {Slot::object, Slot::subject}) {
                const EntityId anchor = slot == Slot::object ? t.subject : t.object;
                const EntityId target = slot == Slot::object ? t.object : t.subject;
                const auto key = std::make_pair((static_cast<std::uint64_t>(anchor) << 32) | t.predicate,
                                                slot == Slot::object ? 0 : 1);
                auto [it, inserted] = index.emplace(key, keys_.size());
                if (inserted) keys_.push_back({anchor, t.predicate, slot, {}});
                keys_[it->second].positives.push_back(target);
            }
        }
    }
}

EmbeddingModel Trainer::initial_model() {
    auto model = EmbeddingModel::create(settings_.method, kg_.entity_count(), kg_.relation_count(), settings_.dim,
                                        settings_.init, settings_.init_params, rng_);
    grad_ = Gradient::zeros_like(model);
    return model;
}

std::size_t Trainer::example_count() const {
    return settings_.training == TrainingMethod::k_vs_all ? keys_.size() : kg_.train().size();
}

PreparedBatch Trainer::prepare_batch(std::span<const std::size_t> examples) {
    PreparedBatch batch;
    auto& rows = batch.rows;
    const std::size_t n = kg_.entity_count();
    switch (settings_.training) {
        case TrainingMethod::negative_sampling: {
            std::uniform_int_distribution<EntityId> entity(0, static_cast<EntityId>(n - 1));
            std::bernoulli_distribution corrupt_subject(0.5);
            for (auto idx : examples) {
                const auto& t = kg_.train()[idx];
                Query objects{t.subject, t.predicate, Slot::object, false, {t.object}};
                Query subjects{t.object, t.predicate, Slot::subject, false, {}};
                for (std::size_t k = 0; k < settings_.constants.negatives; ++k) {
                    const bool subject_side = corrupt_subject(rng_);
                    EntityId x = entity(rng_);
                    for (std::size_t attempt = 0; attempt < settings_.constants.max_resample; ++attempt) {
                        Triple c = subject_side ? Triple{x, t.predicate, t.object} : Triple{t.subject, t.predicate, x};
                        if (!train_set_.contains(pack_triple(c))) break;
                        x = entity(rng_);
                    }
                    (subject_side ? subjects : objects).candidates.push_back(x);
                }
                rows.begin_row();
                rows.labels.push_back(1.0);
                rows.labels.insert(rows.labels.end(), objects.candidates.size() - 1, 0.0);
                rows.labels.insert(rows.labels.end(), subjects.candidates.size(), 0.0);
                rows.end_row();
                batch.queries.push_back(std::move(objects));
                if (!subjects.candidates.empty()) batch.queries.push_back(std::move(subjects));
            }
            break;
        }
        case TrainingMethod::one_vs_all: {
            // Other true completions stay labelled 0 on purpose.
            for (auto idx : examples) {
                const auto& t = kg_.train()[idx];
                for (Slot slot : {Slot::object, Slot::subject}) {
                    const EntityId anchor = slot == Slot::object ? t.subject : t.object;
                    const EntityId target = slot == Slot::object ? t.object : t.subject;
                    batch.queries.push_back({anchor, t.predicate, slot, true, {}});
                    rows.begin_row();
                    const std::size_t start = rows.labels.size();
                    rows.labels.resize(start + n, 0.0);
                    rows.labels[start + target] = 1.0;
                    rows.end_row();
                }
            }
            break;
        }
        case TrainingMethod::k_vs_all: {
            for (auto idx : examples) {
                const auto& key = keys_.at(idx);
                batch.queries.push_back({key.anchor, key.relation, key.slot, true, {}});
                rows.begin_row();
                const std::size_t start = rows.labels.size();
                rows.labels.resize(start + n, 0.0);
                for (auto x : key.positives) rows.labels[start + x] = 1.0;
                rows.end_row();
            }
            break;
        }
    }
    return batch;
}

double Trainer::train_epoch(EmbeddingModel& model, TrainState& state) {
    std::vector<std::size_t> order(example_count());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng_);
    if (grad_.entities.rows() != model.entities.rows() || grad_.relations.cols() != model.relations.cols()) {
        grad_ = Gradient::zeros_like(model);
    }
    const DropoutContext dropout{settings_.dropout, &rng_};
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += settings_.batch_size) {
        const std::size_t end = std::min(order.size(), start + settings_.batch_size);
        auto batch = prepare_batch(std::span<const std::size_t>(order).subspan(start, end - start));
        grad_.clear();
        const double loss = compute_loss_and_gradient(model, batch, settings_.loss, settings_.constants.margin,
                                                      settings_.regularization_weight, dropout, grad_);
        if (!std::isfinite(loss)) return std::numeric_limits<double>::quiet_NaN();
        optimizer_step(model, state, grad_, settings_.optimizer);
        total += loss;
        ++batches;
    }
    ++state.epoch;
    if (!model.all_finite()) return std::numeric_limits<double>::quiet_NaN();
    return batches ? total / static_cast<double>(batches) : 0.0;
}

TrainOutcome train(const KnowledgeGraph& kg, const PositiveSet& positives, const TrainingSettings& settings,
                   std::uint64_t seed) {
    const auto started = std::chrono::steady_clock::now();
    TrainOutcome outcome;
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    };
    try {
        Trainer trainer(kg, settings, seed);
        EmbeddingModel model = trainer.initial_model();
        TrainState state = TrainState::fresh(model, settings.learning_rate);
        const auto& c = settings.constants;
        const bool has_valid = !kg.valid().empty();

        outcome.model = model;
        double best_checkpoint = -std::numeric_limits<double>::infinity();
        auto validate = [&] {
            const double mrr = evaluate(model, kg.valid(), positives, c.direction).mrr;
            if (mrr > best_checkpoint) {
                best_checkpoint = mrr;
                outcome.model = model;
            }
            lr_step(state, mrr, settings.lr_patience, c.lr_decay, c.improvement_tolerance);
        };
        for (std::size_t epoch = 1; epoch <= c.max_epochs; ++epoch) {
            const double loss = trainer.train_epoch(model, state);
            outcome.epochs_run = epoch;
            if (!std::isfinite(loss)) {
                outcome.failure_reason = "non-finite loss in epoch " + std::to_string(epoch);
                outcome.seconds = elapsed();
                return outcome;
            }
            const bool last = epoch == c.max_epochs;
            if (has_valid && (epoch % c.valid_every == 0 || last)) validate();
        }
        if (!has_valid) outcome.model = model;
        if (has_valid && c.max_epochs > 0) {
            outcome.valid_mrr = best_checkpoint;
        } else if (has_valid) {
            outcome.valid_mrr = evaluate(outcome.model, kg.valid(), positives, c.direction).mrr;
        }
        if (!kg.test().empty()) outcome.test = evaluate(outcome.model, kg.test(), positives, c.direction);
        outcome.completed = true;
    } catch (const std::exception& e) {
        outcome.completed = false;
        outcome.failure_reason = e.what();
    }
    outcome.seconds = elapsed();
    return outcome;
}

}  // namespace kgsens
