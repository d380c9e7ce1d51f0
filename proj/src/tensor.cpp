#include "ocnna/tensor.hpp"

#include <cmath>
#include <sstream>

namespace ocnna {

std::size_t shape_product(std::span<const std::size_t> shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_to_string(std::span<const std::size_t> shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << ", ";
        out << shape[i];
    }
    out << ']';
    return out.str();
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0f) {
    for (std::size_t d : shape_) {
        if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_str());
    }
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    for (std::size_t d : shape_) {
        if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_str());
    }
    if (shape_product(shape_) != data_.size()) {
        throw ShapeError("tensor shape " + shape_str() + " implies " +
                         std::to_string(shape_product(shape_)) + " elements but " +
                         std::to_string(data_.size()) + " were provided");
    }
}

Tensor Tensor::from_external(std::vector<std::size_t> shape, std::vector<float> data,
                             const std::string& what) {
    Tensor t(std::move(shape), std::move(data));
    if (!t.all_finite()) {
        throw NumericError(what + ": non-finite value in external data");
    }
    return t;
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= shape_.size()) {
        throw ShapeError("axis " + std::to_string(axis) + " out of range for tensor " + shape_str());
    }
    return shape_[axis];
}

bool Tensor::all_finite() const {
    for (float v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string Tensor::shape_str() const { return shape_to_string(shape_); }

MatrixView as_matrix(const Tensor& t) {
    if (t.rank() != 2) {
        throw ShapeError("as_matrix: tensor " + t.shape_str() + " is not rank 2");
    }
    return {t.data(), t.dim(0), t.dim(1)};
}

} // namespace ocnna
