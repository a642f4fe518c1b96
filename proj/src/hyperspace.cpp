#include "kgsens/hyperspace.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "kgsens/error.hpp"

namespace kgsens {

namespace {

double to_unit(const Dimension& d, double value) {
    if (d.scale == Scale::log) return (std::log(value) - std::log(d.lower)) / (std::log(d.upper) - std::log(d.lower));
    return (value - d.lower) / (d.upper - d.lower);
}

double from_unit(const Dimension& d, double u) {
    if (d.scale == Scale::log) return std::exp(std::log(d.lower) + u * (std::log(d.upper) - std::log(d.lower)));
    return d.lower + u * (d.upper - d.lower);
}

const char* kind_name(DimensionKind k) {
    switch (k) {
        case DimensionKind::continuous: return "continuous";
        case DimensionKind::integer: return "integer";
        case DimensionKind::categorical: return "categorical";
    }
    return "continuous";
}

Dimension categorical(std::string name, std::string group, std::vector<std::string> levels) {
    Dimension d;
    d.name = std::move(name);
    d.group = std::move(group);
    d.kind = DimensionKind::categorical;
    d.levels = std::move(levels);
    return d;
}

Dimension numeric(std::string name, std::string group, DimensionKind kind, double lower, double upper, Scale scale) {
    Dimension d;
    d.name = std::move(name);
    d.group = std::move(group);
    d.kind = kind;
    d.lower = lower;
    d.upper = upper;
    d.scale = scale;
    return d;
}

}  // namespace

std::size_t Dimension::level_index(std::string_view level) const {
    auto it = std::find(levels.begin(), levels.end(), level);
    if (it == levels.end()) throw UsageError("unknown level '" + std::string(level) + "' for " + name);
    return static_cast<std::size_t>(it - levels.begin());
}

HyperparameterSpace::HyperparameterSpace(std::vector<Dimension> dimensions) : dimensions_(std::move(dimensions)) {
    for (const auto& d : dimensions_) {
        if (d.name.empty()) throw UsageError("dimension without a name");
        if (d.kind == DimensionKind::categorical) {
            if (d.levels.size() < 2) throw UsageError("categorical dimension " + d.name + " needs at least 2 levels");
        } else {
            if (!(d.lower < d.upper)) throw UsageError("dimension " + d.name + " needs lower < upper");
            if (d.scale == Scale::log && d.lower <= 0.0) {
                throw UsageError("log-scale dimension " + d.name + " needs positive bounds");
            }
        }
        offsets_.push_back(width_);
        width_ += d.width();
    }
    for (std::size_t i = 0; i < dimensions_.size(); ++i) {
        for (std::size_t j = i + 1; j < dimensions_.size(); ++j) {
            if (dimensions_[i].name == dimensions_[j].name) throw UsageError("duplicate dimension " + dimensions_[i].name);
        }
    }
}

std::size_t HyperparameterSpace::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < dimensions_.size(); ++i) {
        if (dimensions_[i].name == name) return i;
    }
    throw UsageError("unknown hyperparameter " + std::string(name));
}

std::vector<std::string> HyperparameterSpace::column_names() const {
    std::vector<std::string> names;
    for (const auto& d : dimensions_) {
        if (d.kind == DimensionKind::categorical) {
            for (const auto& level : d.levels) names.push_back(d.name + "=" + level);
        } else {
            names.push_back(d.name);
        }
    }
    return names;
}

std::vector<std::string> HyperparameterSpace::column_groups() const {
    std::vector<std::string> groups;
    for (const auto& d : dimensions_) {
        for (std::size_t k = 0; k < d.width(); ++k) groups.push_back(d.group.empty() ? d.name : d.group);
    }
    return groups;
}

bool HyperparameterSpace::is_dummy_column(std::size_t column) const {
    for (std::size_t d = 0; d < dimensions_.size(); ++d) {
        if (column >= offsets_[d] && column < offsets_[d] + dimensions_[d].width()) {
            return dimensions_[d].kind == DimensionKind::categorical;
        }
    }
    throw UsageError("column out of range");
}

HyperparameterSpace default_space() {
    using K = DimensionKind;
    return HyperparameterSpace({
        categorical("training_method", "training method", {"negative_sampling", "1vsAll", "KvsAll"}),
        categorical("loss", "loss function", {"bce", "kl", "margin_ranking"}),
        categorical("weight_init", "weight initialisation", {"normal", "uniform", "xavier_normal", "xavier_uniform"}),
        categorical("optimizer", "gradient descent algorithm", {"adam", "adagrad"}),
        numeric("embedding_size", "embedding size", K::integer, 16, 256, Scale::log),
        numeric("batch_size", "batch size", K::integer, 32, 1024, Scale::log),
        numeric("learning_rate", "learning rate", K::continuous, 1e-4, 1e-1, Scale::log),
        numeric("lr_patience", "lr scheduler patience", K::integer, 0, 10, Scale::linear),
        numeric("init_normal_std", "weight initialisation", K::continuous, 1e-5, 1.0, Scale::log),
        numeric("init_uniform_lower", "weight initialisation", K::continuous, -1.0, -1e-5, Scale::linear),
        numeric("regularization_weight", "regularisation weight", K::continuous, 1e-12, 1e-2, Scale::log),
        numeric("dropout", "dropout", K::continuous, 0.0, 0.5, Scale::linear),
    });
}

HyperparameterSpace space_from_json(const nlohmann::json& j) {
    std::vector<Dimension> dims;
    try {
        for (const auto& item : j.at("dimensions")) {
            Dimension d;
            d.name = item.at("name").get<std::string>();
            d.group = item.value("group", d.name);
            const auto kind = item.at("kind").get<std::string>();
            if (kind == "categorical") {
                d.kind = DimensionKind::categorical;
                d.levels = item.at("levels").get<std::vector<std::string>>();
            } else if (kind == "continuous" || kind == "integer") {
                d.kind = kind == "integer" ? DimensionKind::integer : DimensionKind::continuous;
                d.lower = item.at("lower").get<double>();
                d.upper = item.at("upper").get<double>();
                const auto scale = item.value("scale", std::string("linear"));
                if (scale != "linear" && scale != "log") throw UsageError("unknown scale " + scale);
                d.scale = scale == "log" ? Scale::log : Scale::linear;
            } else {
                throw UsageError("unknown dimension kind " + kind);
            }
            dims.push_back(std::move(d));
        }
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("malformed space definition: ") + e.what());
    }
    return HyperparameterSpace(std::move(dims));
}

nlohmann::json space_to_json(const HyperparameterSpace& space) {
    auto dims = nlohmann::json::array();
    for (const auto& d : space.dimensions()) {
        nlohmann::json item{{"name", d.name}, {"group", d.group}, {"kind", kind_name(d.kind)}};
        if (d.kind == DimensionKind::categorical) {
            item["levels"] = d.levels;
        } else {
            item["lower"] = d.lower;
            item["upper"] = d.upper;
            item["scale"] = d.scale == Scale::log ? "log" : "linear";
        }
        dims.push_back(std::move(item));
    }
    return {{"dimensions", dims}};
}

double TrialConfig::number(const HyperparameterSpace& space, std::string_view name) const {
    const auto& v = values.at(space.index_of(name));
    if (const auto* d = std::get_if<double>(&v)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    throw UsageError("hyperparameter " + std::string(name) + " is categorical");
}

const std::string& TrialConfig::level(const HyperparameterSpace& space, std::string_view name) const {
    const auto& v = values.at(space.index_of(name));
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    throw UsageError("hyperparameter " + std::string(name) + " is not categorical");
}

void round_dummies(std::span<double> point, const HyperparameterSpace& space) {
    if (point.size() != space.encoded_width()) throw UsageError("point width does not match the space");
    const auto& dims = space.dimensions();
    for (std::size_t d = 0; d < dims.size(); ++d) {
        if (dims[d].kind != DimensionKind::categorical) continue;
        auto group = point.subspan(space.offset(d), dims[d].width());
        auto best = static_cast<std::size_t>(std::max_element(group.begin(), group.end()) - group.begin());
        for (std::size_t k = 0; k < group.size(); ++k) group[k] = k == best ? 1.0 : 0.0;
    }
}

DecodedPoint decode(std::span<const double> point, const HyperparameterSpace& space) {
    if (point.size() != space.encoded_width()) throw UsageError("point width does not match the space");
    for (double u : point) {
        if (!(u >= 0.0 && u <= 1.0)) throw UsageError("point coordinate outside [0, 1]");
    }
    DecodedPoint out;
    out.rounded.assign(point.begin(), point.end());
    round_dummies(out.rounded, space);
    const auto& dims = space.dimensions();
    for (std::size_t d = 0; d < dims.size(); ++d) {
        const auto& dim = dims[d];
        const std::size_t col = space.offset(d);
        switch (dim.kind) {
            case DimensionKind::categorical: {
                auto group = std::span<const double>(out.rounded).subspan(col, dim.width());
                auto best = static_cast<std::size_t>(std::find(group.begin(), group.end(), 1.0) - group.begin());
                out.values.emplace_back(dim.levels[best]);
                break;
            }
            case DimensionKind::integer: {
                double x = std::floor(from_unit(dim, point[col]) + 0.5);
                x = std::clamp(x, std::ceil(dim.lower), std::floor(dim.upper));
                out.values.emplace_back(static_cast<std::int64_t>(x));
                break;
            }
            case DimensionKind::continuous:
                out.values.emplace_back(std::clamp(from_unit(dim, point[col]), dim.lower, dim.upper));
                break;
        }
    }
    return out;
}

std::vector<double> encode(std::span<const ParamValue> values, const HyperparameterSpace& space) {
    const auto& dims = space.dimensions();
    if (values.size() != dims.size()) throw UsageError("config has the wrong number of values");
    std::vector<double> out(space.encoded_width(), 0.0);
    for (std::size_t d = 0; d < dims.size(); ++d) {
        const auto& dim = dims[d];
        const std::size_t col = space.offset(d);
        if (dim.kind == DimensionKind::categorical) {
            const auto* level = std::get_if<std::string>(&values[d]);
            if (!level) throw UsageError(dim.name + " expects a level name");
            out[col + dim.level_index(*level)] = 1.0;
            continue;
        }
        double v = 0.0;
        if (const auto* x = std::get_if<double>(&values[d])) {
            v = *x;
        } else if (const auto* i = std::get_if<std::int64_t>(&values[d])) {
            v = static_cast<double>(*i);
        } else {
            throw UsageError(dim.name + " expects a number");
        }
        if (!(v >= dim.lower && v <= dim.upper)) throw UsageError(dim.name + " value out of bounds");
        out[col] = std::clamp(to_unit(dim, v), 0.0, 1.0);
    }
    return out;
}

}  // namespace kgsens
