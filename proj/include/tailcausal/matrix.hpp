#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tailcausal/common.hpp"

namespace tailcausal {

/// Dense d x d matrix of doubles, row-major. Accessors are 1-based to match
/// node ids; row/column meaning (impulse source, conditioning variable, ...)
/// is defined by each owning type.
class SquareMatrix {
public:
    SquareMatrix() = default;

    explicit SquareMatrix(int dim, double fill = 0.0)
        : d_(dim), values_(static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim), fill) {
        if (dim < 1) throw ValidationError("matrix dimension must be >= 1, got " + std::to_string(dim));
    }

    SquareMatrix(int dim, std::vector<double> row_major) : d_(dim), values_(std::move(row_major)) {
        if (dim < 1) throw ValidationError("matrix dimension must be >= 1, got " + std::to_string(dim));
        if (values_.size() != static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim)) {
            throw ValidationError("matrix data has " + std::to_string(values_.size()) + " entries, expected " +
                                  std::to_string(static_cast<std::size_t>(dim) * dim));
        }
    }

    int dim() const { return d_; }

    double at(int row, int col) const { return values_[index(row, col)]; }
    double& at(int row, int col) { return values_[index(row, col)]; }

    const std::vector<double>& data() const { return values_; }

private:
    std::size_t index(int row, int col) const {
        if (row < 1 || row > d_ || col < 1 || col > d_) {
            throw ValidationError("matrix index (" + std::to_string(row) + "," + std::to_string(col) +
                                  ") out of range for dimension " + std::to_string(d_));
        }
        return static_cast<std::size_t>(row - 1) * static_cast<std::size_t>(d_) + static_cast<std::size_t>(col - 1);
    }

    int d_ = 0;
    std::vector<double> values_;
};

} // namespace tailcausal
