#include "kgsens/kge_model.hpp"

#include <cmath>

#include "kgsens/error.hpp"

namespace kgsens {

namespace {

// Query vector q with score(x) = q · e_x, for the bilinear scorers.
void bilinear_query(const QueryView& q, std::span<double> out) {
    const std::size_t d = q.dim;
    const auto& a = q.anchor;
    const auto& r = q.relation;
    switch (q.method) {
        case Method::distmult:
            for (std::size_t k = 0; k < d; ++k) out[k] = a[k] * r[k];
            break;
        case Method::complex: {
            const std::size_t h = d / 2;
            for (std::size_t k = 0; k < h; ++k) {
                const double ar = a[k], ai = a[h + k], rr = r[k], ri = r[h + k];
                if (q.slot == Slot::object) {
                    out[k] = ar * rr - ai * ri;
                    out[h + k] = ai * rr + ar * ri;
                } else {
                    out[k] = rr * ar + ri * ai;
                    out[h + k] = rr * ai - ri * ar;
                }
            }
            break;
        }
        case Method::rescal:
            if (q.slot == Slot::object) {
                // q_j = sum_i a_i R_ij
                std::fill(out.begin(), out.end(), 0.0);
                for (std::size_t i = 0; i < d; ++i) {
                    const double ai = a[i];
                    const double* row = &r[i * d];
                    for (std::size_t j = 0; j < d; ++j) out[j] += ai * row[j];
                }
            } else {
                // q_i = sum_j R_ij a_j
                for (std::size_t i = 0; i < d; ++i) {
                    const double* row = &r[i * d];
                    double acc = 0.0;
                    for (std::size_t j = 0; j < d; ++j) acc += row[j] * a[j];
                    out[i] = acc;
                }
            }
            break;
        case Method::transe: break;
    }
}

void bilinear_query_backward(const QueryView& q, std::span<const double> gq, const QueryGradient& grad) {
    const std::size_t d = q.dim;
    const auto& a = q.anchor;
    const auto& r = q.relation;
    switch (q.method) {
        case Method::distmult:
            for (std::size_t k = 0; k < d; ++k) {
                grad.anchor[k] += gq[k] * r[k];
                grad.relation[k] += gq[k] * a[k];
            }
            break;
        case Method::complex: {
            const std::size_t h = d / 2;
            for (std::size_t k = 0; k < h; ++k) {
                const double ar = a[k], ai = a[h + k], rr = r[k], ri = r[h + k];
                const double gre = gq[k], gim = gq[h + k];
                if (q.slot == Slot::object) {
                    grad.anchor[k] += gre * rr + gim * ri;
                    grad.anchor[h + k] += -gre * ri + gim * rr;
                    grad.relation[k] += gre * ar + gim * ai;
                    grad.relation[h + k] += -gre * ai + gim * ar;
                } else {
                    grad.relation[k] += gre * ar + gim * ai;
                    grad.relation[h + k] += gre * ai - gim * ar;
                    grad.anchor[k] += gre * rr - gim * ri;
                    grad.anchor[h + k] += gre * ri + gim * rr;
                }
            }
            break;
        }
        case Method::rescal:
            if (q.slot == Slot::object) {
                for (std::size_t i = 0; i < d; ++i) {
                    const double* row = &r[i * d];
                    double* grow = &grad.relation[i * d];
                    double acc = 0.0;
                    for (std::size_t j = 0; j < d; ++j) {
                        acc += row[j] * gq[j];
                        grow[j] += a[i] * gq[j];
                    }
                    grad.anchor[i] += acc;
                }
            } else {
                for (std::size_t i = 0; i < d; ++i) {
                    const double* row = &r[i * d];
                    double* grow = &grad.relation[i * d];
                    for (std::size_t j = 0; j < d; ++j) {
                        grad.anchor[j] += row[j] * gq[i];
                        grow[j] += gq[i] * a[j];
                    }
                }
            }
            break;
        case Method::transe: break;
    }
}

// TransE translation target: object slot t = a + r, subject slot t = a - r;
// the score of candidate x is -||t - x||.
void transe_target(const QueryView& q, std::span<double> t) {
    const double sign = q.slot == Slot::object ? 1.0 : -1.0;
    for (std::size_t k = 0; k < q.dim; ++k) t[k] = q.anchor[k] + sign * q.relation[k];
}

template <typename F>
void for_each_candidate(std::span<const EntityId> candidates, std::size_t entity_count, F&& f) {
    if (candidates.empty()) {
        for (std::size_t i = 0; i < entity_count; ++i) f(i, static_cast<EntityId>(i));
    } else {
        for (std::size_t i = 0; i < candidates.size(); ++i) f(i, candidates[i]);
    }
}

}  // namespace

Method parse_method(std::string_view name) {
    if (name == "transe") return Method::transe;
    if (name == "distmult") return Method::distmult;
    if (name == "complex") return Method::complex;
    if (name == "rescal") return Method::rescal;
    throw UsageError("unknown KGE method '" + std::string(name) + "'");
}

std::string_view method_name(Method m) {
    switch (m) {
        case Method::transe: return "transe";
        case Method::distmult: return "distmult";
        case Method::complex: return "complex";
        case Method::rescal: return "rescal";
    }
    return "distmult";
}

InitScheme parse_init(std::string_view name) {
    if (name == "normal") return InitScheme::normal;
    if (name == "uniform") return InitScheme::uniform;
    if (name == "xavier_normal") return InitScheme::xavier_normal;
    if (name == "xavier_uniform") return InitScheme::xavier_uniform;
    throw UsageError("unknown initializer '" + std::string(name) + "'");
}

Matrix init_weights(InitScheme scheme, std::size_t rows, std::size_t cols, const InitParams& params,
                    std::mt19937_64& rng) {
    Matrix m(rows, cols);
    auto& data = m.data();
    const double fan_sum = static_cast<double>(rows + cols);
    switch (scheme) {
        case InitScheme::normal: {
            if (!(params.normal_std > 0.0)) throw UsageError("normal init needs std > 0");
            std::normal_distribution<double> dist(0.0, params.normal_std);
            for (auto& x : data) x = dist(rng);
            break;
        }
        case InitScheme::uniform: {
            if (!(params.uniform_lower < 0.0)) throw UsageError("uniform init needs lower bound < 0");
            std::uniform_real_distribution<double> dist(params.uniform_lower, -params.uniform_lower);
            for (auto& x : data) x = dist(rng);
            break;
        }
        case InitScheme::xavier_normal: {
            std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_sum));
            for (auto& x : data) x = dist(rng);
            break;
        }
        case InitScheme::xavier_uniform: {
            const double bound = std::sqrt(6.0 / fan_sum);
            std::uniform_real_distribution<double> dist(-bound, bound);
            for (auto& x : data) x = dist(rng);
            break;
        }
    }
    return m;
}

Matrix init_weights(InitScheme scheme, std::size_t rows, std::size_t cols, const InitParams& params,
                    std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return init_weights(scheme, rows, cols, params, rng);
}

EmbeddingModel EmbeddingModel::create(Method method, std::size_t entity_count, std::size_t relation_count,
                                      std::size_t dim, InitScheme scheme, const InitParams& params,
                                      std::mt19937_64& rng) {
    if (dim == 0) throw UsageError("embedding size must be positive");
    if (method == Method::complex && dim % 2 != 0) throw UsageError("ComplEx needs an even embedding size");
    EmbeddingModel model;
    model.method = method;
    model.dim = dim;
    model.entities = init_weights(scheme, entity_count, dim, params, rng);
    model.relations = init_weights(scheme, relation_count, model.relation_width(), params, rng);
    return model;
}

bool EmbeddingModel::all_finite() const {
    for (double x : entities.data()) {
        if (!std::isfinite(x)) return false;
    }
    for (double x : relations.data()) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

double score(const EmbeddingModel& model, EntityId s, RelationId p, EntityId o) {
    QueryView q{model.method, model.dim, model.entities.row(s), model.relations.row(p), Slot::object};
    const EntityId candidate[1] = {o};
    double out[1];
    score_candidates(q, model.entities, candidate, out);
    return out[0];
}

void score_candidates(const QueryView& q, const Matrix& entities, std::span<const EntityId> candidates,
                      std::span<double> out) {
    const std::size_t d = q.dim;
    std::vector<double> buffer(d);
    if (q.method == Method::transe) {
        transe_target(q, buffer);
        for_each_candidate(candidates, entities.rows(), [&](std::size_t i, EntityId x) {
            const double* e = entities.row(x).data();
            double acc = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = buffer[k] - e[k];
                acc += diff * diff;
            }
            out[i] = -std::sqrt(acc);
        });
        return;
    }
    bilinear_query(q, buffer);
    for_each_candidate(candidates, entities.rows(), [&](std::size_t i, EntityId x) {
        const double* e = entities.row(x).data();
        double acc = 0.0;
        for (std::size_t k = 0; k < d; ++k) acc += buffer[k] * e[k];
        out[i] = acc;
    });
}

void backward_candidates(const QueryView& q, const Matrix& entities, std::span<const EntityId> candidates,
                         std::span<const double> dscores, const QueryGradient& grad, Matrix& entity_grad) {
    const std::size_t d = q.dim;
    std::vector<double> buffer(d);
    std::vector<double> gq(d, 0.0);
    if (q.method == Method::transe) {
        transe_target(q, buffer);
        for_each_candidate(candidates, entities.rows(), [&](std::size_t i, EntityId x) {
            const double g = dscores[i];
            if (g == 0.0) return;
            const double* e = entities.row(x).data();
            double norm = 0.0;
            for (std::size_t k = 0; k < d; ++k) norm += (buffer[k] - e[k]) * (buffer[k] - e[k]);
            norm = std::sqrt(norm);
            if (norm == 0.0) return;
            double* ge = entity_grad.row(x).data();
            const double scale = g / norm;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = buffer[k] - e[k];
                gq[k] -= scale * diff;
                ge[k] += scale * diff;
            }
        });
        const double sign = q.slot == Slot::object ? 1.0 : -1.0;
        for (std::size_t k = 0; k < d; ++k) {
            grad.anchor[k] += gq[k];
            grad.relation[k] += sign * gq[k];
        }
        return;
    }
    bilinear_query(q, buffer);
    for_each_candidate(candidates, entities.rows(), [&](std::size_t i, EntityId x) {
        const double g = dscores[i];
        if (g == 0.0) return;
        const double* e = entities.row(x).data();
        double* ge = entity_grad.row(x).data();
        for (std::size_t k = 0; k < d; ++k) {
            gq[k] += g * e[k];
            ge[k] += g * buffer[k];
        }
    });
    bilinear_query_backward(q, gq, grad);
}

}  // namespace kgsens
