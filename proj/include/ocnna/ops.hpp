#ifndef OCNNA_OPS_HPP
#define OCNNA_OPS_HPP

#include "ocnna/tensor.hpp"

namespace ocnna {

enum class Padding { Same, Valid };

// ---- forward -------------------------------------------------------------
// Layout is NHWC everywhere; conv is cross-correlation (no kernel flip).
// Reductions accumulate in double and round to float once per output cell.

// input [N,H,W,Cin], kernel [kh,kw,Cin,Cout], bias [Cout].
Tensor conv2d_forward(const Tensor& input, const Tensor& kernel, const Tensor& bias,
                      int stride, Padding padding);

// Valid pooling: output dim = floor((H - window)/stride) + 1.
Tensor maxpool2d(const Tensor& input, int window, int stride);

// input [N,F], weights [F,U], bias [U].
Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

Tensor relu(const Tensor& t);

// Row-wise softmax on [N,C], computed via max-shifted exponentials.
Tensor softmax(const Tensor& t);

// Per-channel affine normalization over the trailing axis.
Tensor batchnorm_forward(const Tensor& t, const Tensor& gamma, const Tensor& beta,
                         const Tensor& mean, const Tensor& var, float eps);

// [N, d1, d2, ...] -> [N, d1*d2*...]
Tensor flatten(const Tensor& t);

// ---- backward ------------------------------------------------------------

struct Conv2dGrads {
    Tensor input;             // same shape as input
    Tensor kernel;            // same shape as kernel
    Tensor bias;              // [Cout]
};

struct DenseGrads {
    Tensor input;             // [N,F]
    Tensor weights;           // [F,U]
    Tensor bias;              // [U]
};

struct BatchnormGrads {
    Tensor input;
    Tensor gamma;             // [C]
    Tensor beta;              // [C]
};

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernel,
                            int stride, Padding padding, const Tensor& upstream);

// Routes each upstream gradient to the first max position in its window.
Tensor maxpool2d_backward(const Tensor& input, int window, int stride, const Tensor& upstream);

DenseGrads dense_backward(const Tensor& input, const Tensor& weights, const Tensor& upstream);

Tensor relu_backward(const Tensor& input, const Tensor& upstream);

// `output` is the forward softmax result for the same input.
Tensor softmax_backward(const Tensor& output, const Tensor& upstream);

// mean/var are treated as constants (stored statistics, not batch moments).
BatchnormGrads batchnorm_backward(const Tensor& input, const Tensor& gamma,
                                  const Tensor& mean, const Tensor& var, float eps,
                                  const Tensor& upstream);

Tensor flatten_backward(const Tensor& input, const Tensor& upstream);

// Output spatial size for one axis.
std::size_t conv_out_dim(std::size_t in, std::size_t k, int stride, Padding padding);
std::size_t pool_out_dim(std::size_t in, int window, int stride);

} // namespace ocnna

#endif
