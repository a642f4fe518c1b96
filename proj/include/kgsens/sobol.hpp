#pragma once
// Unscrambled base-2 Sobol sequence (Joe-Kuo direction numbers, Gray-code
// ordering) and the Saltelli cross-sample design built on it.

#include <array>
#include <cstdint>
#include <vector>

#include "kgsens/matrix.hpp"

namespace kgsens {

inline constexpr std::size_t kSobolMaxDimension = 128;
inline constexpr std::size_t kSobolBits = 32;

namespace detail {
struct DirectionEntry {
    std::uint32_t polynomial;
    std::vector<std::uint32_t> initial;
};
extern const std::array<DirectionEntry, kSobolMaxDimension> kDirectionTable;
}  // namespace detail

class SobolSequence {
public:
    explicit SobolSequence(std::size_t dimension);

    std::size_t dimension() const { return dimension_; }
    // Point at sequence position `index` (index 0 is the origin).
    void point(std::uint64_t index, std::span<double> out) const;

private:
    std::size_t dimension_;
    // directions_[d * kSobolBits + k] = v_{k+1} for dimension d
    std::vector<std::uint32_t> directions_;
};

// n x D matrix of points at indices 1..n (the origin is skipped).
Matrix sobol_points(std::size_t dimension, std::size_t count);

enum class SaltelliBlock { a, ab, ba, b };

// Row layout per base row j (grouped like SALib): A_j, AB^1_j..AB^D_j,
// [BA^1_j..BA^D_j], B_j. Row count N(D+2), or N(2D+2) with second order.
struct SaltelliDesign {
    std::size_t dimension = 0;
    std::size_t base_n = 0;
    bool second_order = false;
    Matrix rows;

    std::size_t stride() const { return second_order ? 2 * dimension + 2 : dimension + 2; }
    std::size_t row_of(std::size_t base_row, SaltelliBlock block, std::size_t column = 0) const;
};

SaltelliDesign saltelli_design(std::size_t dimension, std::size_t base_n, bool second_order);

}  // namespace kgsens
