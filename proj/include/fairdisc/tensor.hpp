#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace fairdisc::ad {

// Dense row-major tensor of 64-bit floats. Rank 0 (scalar), 1 (vector) and
// 2 (matrix) cover everything the models here compute.
class Tensor {
public:
    Tensor() = default;

    static Tensor scalar(double v);
    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor full(std::vector<std::size_t> shape, double value);
    static Tensor from(std::vector<std::size_t> shape, std::vector<double> values);
    static Tensor vec(std::vector<double> values);
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }
    bool is_scalar() const { return shape_.empty() && data_.size() == 1; }

    std::size_t rows() const;
    std::size_t cols() const;

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& at(std::size_t r, std::size_t c);
    double at(std::size_t r, std::size_t c) const;

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    double* raw() { return data_.data(); }
    const double* raw() const { return data_.data(); }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    std::string shape_str() const;

    void fill(double v);
    bool all_finite() const;

private:
    Tensor(std::vector<std::size_t> shape, std::vector<double> values);

    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

} // namespace fairdisc::ad
