#ifndef OCNNA_TENSOR_HPP
#define OCNNA_TENSOR_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ocnna/error.hpp"

namespace ocnna {

// Dense N-dimensional array of 32-bit floats, row-major.
// Immutable by convention once handed to another module; ops return fresh
// tensors instead of mutating inputs.
class Tensor {
public:
    Tensor() = default;

    // Zero-filled tensor of the given shape.
    explicit Tensor(std::vector<std::size_t> shape);

    // Takes ownership of `data`; product(shape) must equal data.size().
    Tensor(std::vector<std::size_t> shape, std::vector<float> data);

    // Construction path for data coming from outside the process
    // (files, user input): additionally rejects NaN/Inf.
    static Tensor from_external(std::vector<std::size_t> shape,
                                std::vector<float> data,
                                const std::string& what = "tensor");

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t dim(std::size_t axis) const;

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    std::span<float> values() { return data_; }
    std::span<const float> values() const { return data_; }

    float& operator[](std::size_t i) { return data_[i]; }
    float operator[](std::size_t i) const { return data_[i]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    // Human-readable "[2, 3, 4]" for error messages.
    std::string shape_str() const;

private:
    std::vector<std::size_t> shape_;
    std::vector<float> data_;
};

std::size_t shape_product(std::span<const std::size_t> shape);
std::string shape_to_string(std::span<const std::size_t> shape);

// Non-owning rows x cols view over contiguous row-major float data.
struct MatrixView {
    const float* data = nullptr;
    std::size_t rows = 0;
    std::size_t cols = 0;

    float at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::size_t size() const { return rows * cols; }
};

// Views a rank-2 tensor as a matrix.
MatrixView as_matrix(const Tensor& t);

} // namespace ocnna

#endif
