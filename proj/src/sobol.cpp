#include "kgsens/sobol.hpp"

#include <bit>

#include "kgsens/error.hpp"

namespace kgsens {

SobolSequence::SobolSequence(std::size_t dimension) : dimension_(dimension) {
    if (dimension == 0) throw UsageError("Sobol dimension must be at least 1");
    if (dimension > kSobolMaxDimension) {
        throw UsageError("Sobol dimension " + std::to_string(dimension) + " exceeds the direction table width " +
                         std::to_string(kSobolMaxDimension));
    }
    directions_.assign(dimension * kSobolBits, 0);
    for (std::size_t d = 0; d < dimension; ++d) {
        std::uint32_t* v = &directions_[d * kSobolBits];
        if (d == 0) {
            for (std::size_t k = 0; k < kSobolBits; ++k) v[k] = 1U << (kSobolBits - 1 - k);
            continue;
        }
        const auto& entry = detail::kDirectionTable[d];
        const auto degree = static_cast<std::size_t>(std::bit_width(entry.polynomial) - 1);
        std::vector<std::uint32_t> m(kSobolBits);
        for (std::size_t k = 0; k < degree && k < kSobolBits; ++k) m[k] = entry.initial[k];
        for (std::size_t k = degree; k < kSobolBits; ++k) {
            std::uint32_t value = m[k - degree] ^ (m[k - degree] << degree);
            for (std::size_t j = 1; j < degree; ++j) {
                // coefficient a_j is bit (degree - 1 - j) of the interior bits
                if ((entry.polynomial >> (degree - j)) & 1U) value ^= m[k - j] << j;
            }
            m[k] = value;
        }
        for (std::size_t k = 0; k < kSobolBits; ++k) v[k] = m[k] << (kSobolBits - 1 - k);
    }
}

void SobolSequence::point(std::uint64_t index, std::span<double> out) const {
    if (index >= (1ULL << kSobolBits)) throw UsageError("Sobol index exceeds 2^32");
    const std::uint64_t gray = index ^ (index >> 1);
    constexpr double scale = 1.0 / 4294967296.0;
    for (std::size_t d = 0; d < dimension_; ++d) {
        const std::uint32_t* v = &directions_[d * kSobolBits];
        std::uint32_t x = 0;
        for (std::uint64_t g = gray, k = 0; g != 0; g >>= 1, ++k) {
            if (g & 1U) x ^= v[k];
        }
        out[d] = static_cast<double>(x) * scale;
    }
}

Matrix sobol_points(std::size_t dimension, std::size_t count) {
    if (count == 0) throw UsageError("Sobol point count must be at least 1");
    SobolSequence seq(dimension);
    Matrix points(count, dimension);
    for (std::size_t i = 0; i < count; ++i) seq.point(i + 1, points.row(i));
    return points;
}

std::size_t SaltelliDesign::row_of(std::size_t base_row, SaltelliBlock block, std::size_t column) const {
    const std::size_t start = base_row * stride();
    switch (block) {
        case SaltelliBlock::a: return start;
        case SaltelliBlock::ab: return start + 1 + column;
        case SaltelliBlock::ba: return start + 1 + dimension + column;
        case SaltelliBlock::b: return start + stride() - 1;
    }
    return start;
}

SaltelliDesign saltelli_design(std::size_t dimension, std::size_t base_n, bool second_order) {
    if (base_n == 0) throw UsageError("Saltelli base sample count must be positive");
    if (dimension == 0) throw UsageError("Saltelli dimension must be at least 1");
    SaltelliDesign design;
    design.dimension = dimension;
    design.base_n = base_n;
    design.second_order = second_order;
    const Matrix base = sobol_points(2 * dimension, base_n);
    design.rows = Matrix(base_n * design.stride(), dimension);
    for (std::size_t j = 0; j < base_n; ++j) {
        auto src = base.row(j);
        auto a = src.subspan(0, dimension);
        auto b = src.subspan(dimension, dimension);
        auto copy = [&](std::size_t r, std::span<const double> from) {
            std::copy(from.begin(), from.end(), design.rows.row(r).begin());
        };
        copy(design.row_of(j, SaltelliBlock::a), a);
        for (std::size_t i = 0; i < dimension; ++i) {
            auto r = design.row_of(j, SaltelliBlock::ab, i);
            copy(r, a);
            design.rows(r, i) = b[i];
        }
        if (second_order) {
            for (std::size_t i = 0; i < dimension; ++i) {
                auto r = design.row_of(j, SaltelliBlock::ba, i);
                copy(r, b);
                design.rows(r, i) = a[i];
            }
        }
        copy(design.row_of(j, SaltelliBlock::b), b);
    }
    return design;
}

}  // namespace kgsens
