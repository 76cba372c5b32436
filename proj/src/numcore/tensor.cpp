#include "tabppo/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tabppo::num {

std::string shape_string(const Shape& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << "x";
        out << shape[i];
    }
    out << ']';
    return out.str();
}

std::size_t shape_volume(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_volume(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_volume(shape_) != data_.size()) {
        throw DimensionError("tensor shape " + shape_string(shape_) + " does not match " +
                             std::to_string(data_.size()) + " values");
    }
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t n_rows = rows.size();
    const std::size_t n_cols = n_rows ? rows.begin()->size() : 0;
    std::vector<double> values;
    values.reserve(n_rows * n_cols);
    for (const auto& row : rows) {
        if (row.size() != n_cols) throw DimensionError("ragged rows in Tensor::matrix");
        values.insert(values.end(), row.begin(), row.end());
    }
    return Tensor({n_rows, n_cols}, std::move(values));
}

Tensor Tensor::vector(std::initializer_list<double> values) {
    return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::scalar(double value) { return Tensor({1}, std::vector<double>{value}); }

Tensor Tensor::identity(std::size_t n) {
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= shape_.size()) {
        throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_string(shape_));
    }
    return shape_[axis];
}

double& Tensor::at(std::size_t row, std::size_t col) { return data_[row * shape_.back() + col]; }

double Tensor::at(std::size_t row, std::size_t col) const { return data_[row * shape_.back() + col]; }

double Tensor::item() const {
    if (data_.size() != 1) throw UsageError("item() on tensor of shape " + shape_string(shape_));
    return data_[0];
}

Tensor Tensor::reshaped(Shape shape) const {
    if (shape_volume(shape) != data_.size()) {
        throw DimensionError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    }
    return Tensor(std::move(shape), data_);
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace tabppo::num
