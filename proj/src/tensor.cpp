#include "fairdisc/tensor.hpp"

#include <cmath>
#include <sstream>

#include "fairdisc/errors.hpp"

namespace fairdisc::ad {

namespace {

std::size_t shape_size(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

} // namespace

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
    if (shape_size(shape_) != data_.size()) {
        throw InvalidArgument("Tensor: value count " + std::to_string(data_.size()) +
                              " does not match shape " + shape_str());
    }
}

Tensor Tensor::scalar(double v) {
    return Tensor({}, {v});
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    std::size_t n = shape_size(shape);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
    std::size_t n = shape_size(shape);
    return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::from(std::vector<std::size_t> shape, std::vector<double> values) {
    return Tensor(std::move(shape), std::move(values));
}

Tensor Tensor::vec(std::vector<double> values) {
    std::size_t n = values.size();
    return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
    std::size_t r = rows.size();
    std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> values;
    values.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw InvalidArgument("Tensor::matrix: ragged rows");
        values.insert(values.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(values));
}

std::size_t Tensor::rows() const {
    if (rank() != 2) throw InvalidArgument("Tensor::rows: rank-2 required, got shape " + shape_str());
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw InvalidArgument("Tensor::cols: rank-2 required, got shape " + shape_str());
    return shape_[1];
}

double& Tensor::at(std::size_t r, std::size_t c) {
    return data_[r * cols() + c];
}

double Tensor::at(std::size_t r, std::size_t c) const {
    return data_[r * cols() + c];
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) os << "x";
        os << shape_[i];
    }
    os << "]";
    return os.str();
}

void Tensor::fill(double v) {
    for (auto& x : data_) x = v;
}

bool Tensor::all_finite() const {
    for (double x : data_) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

} // namespace fairdisc::ad
