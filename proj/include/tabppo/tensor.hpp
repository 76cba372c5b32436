#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tabppo::num {

using Shape = std::vector<std::size_t>;

/// Raised when operand shapes are incompatible. The message names both shapes.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a NaN or infinity reaches a point where it must not.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Misuse of the autodiff API (non-scalar loss, foreign tape, ...).
class UsageError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

std::string shape_string(const Shape& shape);
std::size_t shape_volume(const Shape& shape);

/// Dense row-major tensor of doubles.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    /// Builds a 2-D tensor from nested rows; all rows must have the same length.
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor vector(std::initializer_list<double> values);
    static Tensor scalar(double value);
    static Tensor identity(std::size_t n);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::vector<double>& storage() noexcept { return data_; }
    const std::vector<double>& storage() const noexcept { return data_; }

    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    double& at(std::size_t row, std::size_t col);
    double at(std::size_t row, std::size_t col) const;

    /// Returns the scalar value of a one-element tensor.
    double item() const;

    Tensor reshaped(Shape shape) const;
    void fill(double value);
    bool all_finite() const noexcept;

    bool operator==(const Tensor& other) const = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

}  // namespace tabppo::num
