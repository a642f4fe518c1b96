#pragma once
// Mixed categorical/continuous hyperparameter space and the codec between
// unit-cube points, decoded trial configurations and regression vectors.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace kgsens {

enum class DimensionKind { continuous, integer, categorical };
enum class Scale { linear, log };

struct Dimension {
    std::string name;
    // Category used when grouping sensitivity indices.
    std::string group;
    DimensionKind kind = DimensionKind::continuous;
    double lower = 0.0;
    double upper = 1.0;
    Scale scale = Scale::linear;
    std::vector<std::string> levels;

    std::size_t width() const { return kind == DimensionKind::categorical ? levels.size() : 1; }
    std::size_t level_index(std::string_view level) const;  // throws UsageError
};

using ParamValue = std::variant<double, std::int64_t, std::string>;

class HyperparameterSpace {
public:
    HyperparameterSpace() = default;
    explicit HyperparameterSpace(std::vector<Dimension> dimensions);

    const std::vector<Dimension>& dimensions() const { return dimensions_; }
    std::size_t encoded_width() const { return width_; }
    // First encoded column of dimension `d`.
    std::size_t offset(std::size_t d) const { return offsets_.at(d); }
    std::size_t index_of(std::string_view name) const;  // throws UsageError

    // One label per encoded column: "name" or "name=level".
    std::vector<std::string> column_names() const;
    // Group label per encoded column.
    std::vector<std::string> column_groups() const;
    bool is_dummy_column(std::size_t column) const;

private:
    std::vector<Dimension> dimensions_;
    std::vector<std::size_t> offsets_;
    std::size_t width_ = 0;
};

// Twelve dummy columns (training method, loss, initializer, optimizer)
// followed by eight continuous/integer columns.
HyperparameterSpace default_space();

HyperparameterSpace space_from_json(const nlohmann::json& j);
nlohmann::json space_to_json(const HyperparameterSpace& space);

struct TrialConfig {
    std::string dataset;
    std::string method;
    std::vector<ParamValue> values;  // one per dimension, in space order

    double number(const HyperparameterSpace& space, std::string_view name) const;
    const std::string& level(const HyperparameterSpace& space, std::string_view name) const;
};

struct DecodedPoint {
    std::vector<ParamValue> values;
    // Input point with each categorical group replaced by its one-hot
    // argmax; continuous columns are copied through unchanged.
    std::vector<double> rounded;
};

// Coordinates must lie in [0, 1]. Integer dimensions round half up after
// mapping; categorical ties go to the lowest level index.
DecodedPoint decode(std::span<const double> point, const HyperparameterSpace& space);

// Only the one-hot rounding part of decode, in place.
void round_dummies(std::span<double> point, const HyperparameterSpace& space);

// Unit-cube coordinates for numeric dimensions, 0/1 dummies for levels.
std::vector<double> encode(std::span<const ParamValue> values, const HyperparameterSpace& space);

}  // namespace kgsens
