#ifndef OCNNA_TEST_ORACLES_HPP
#define OCNNA_TEST_ORACLES_HPP

// Brute-force reference implementations used as independent oracles.
// Everything here is double precision and written as plainly as possible;
// no code is shared with the library paths under test.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "ocnna/tensor.hpp"

namespace oracle {

struct DTensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    std::size_t size() const { return data.size(); }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }
};

inline DTensor from_tensor(const ocnna::Tensor& t) {
    DTensor d;
    d.shape = t.shape();
    d.data.assign(t.values().begin(), t.values().end());
    return d;
}

inline std::size_t product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

// Explicitly zero-pads, then runs the plain 7-loop convolution.
inline DTensor conv2d(const DTensor& in, const DTensor& kernel,
                      const std::vector<double>& bias, int stride, bool same) {
    const std::size_t N = in.shape[0], H = in.shape[1], W = in.shape[2], Ci = in.shape[3];
    const std::size_t kh = kernel.shape[0], kw = kernel.shape[1], Co = kernel.shape[3];

    std::size_t Ho, Wo, pad_top = 0, pad_left = 0;
    if (same) {
        Ho = (H + stride - 1) / stride;
        Wo = (W + stride - 1) / stride;
        const std::size_t need_h = (Ho - 1) * stride + kh;
        const std::size_t need_w = (Wo - 1) * stride + kw;
        pad_top = need_h > H ? (need_h - H) / 2 : 0;
        pad_left = need_w > W ? (need_w - W) / 2 : 0;
    } else {
        Ho = (H - kh) / stride + 1;
        Wo = (W - kw) / stride + 1;
    }

    const std::size_t Hp = H + (same ? ((Ho - 1) * stride + kh > H ? (Ho - 1) * stride + kh - H : 0) : 0);
    const std::size_t Wp = W + (same ? ((Wo - 1) * stride + kw > W ? (Wo - 1) * stride + kw - W : 0) : 0);
    std::vector<double> padded(N * Hp * Wp * Ci, 0.0);
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t h = 0; h < H; ++h)
            for (std::size_t w = 0; w < W; ++w)
                for (std::size_t c = 0; c < Ci; ++c)
                    padded[((n * Hp + h + pad_top) * Wp + w + pad_left) * Ci + c] =
                        in.data[((n * H + h) * W + w) * Ci + c];

    DTensor out{{N, Ho, Wo, Co}, std::vector<double>(N * Ho * Wo * Co, 0.0)};
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t oh = 0; oh < Ho; ++oh)
            for (std::size_t ow = 0; ow < Wo; ++ow)
                for (std::size_t co = 0; co < Co; ++co) {
                    double acc = bias[co];
                    for (std::size_t r = 0; r < kh; ++r)
                        for (std::size_t s = 0; s < kw; ++s)
                            for (std::size_t ci = 0; ci < Ci; ++ci)
                                acc += padded[((n * Hp + oh * stride + r) * Wp +
                                               ow * stride + s) * Ci + ci] *
                                       kernel.data[((r * kw + s) * Ci + ci) * Co + co];
                    out.data[((n * Ho + oh) * Wo + ow) * Co + co] = acc;
                }
    return out;
}

inline DTensor maxpool(const DTensor& in, int window, int stride) {
    const std::size_t N = in.shape[0], H = in.shape[1], W = in.shape[2], C = in.shape[3];
    const std::size_t Ho = (H - window) / stride + 1;
    const std::size_t Wo = (W - window) / stride + 1;
    DTensor out{{N, Ho, Wo, C}, std::vector<double>(N * Ho * Wo * C, 0.0)};
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t oh = 0; oh < Ho; ++oh)
            for (std::size_t ow = 0; ow < Wo; ++ow)
                for (std::size_t c = 0; c < C; ++c) {
                    double best = -1e300;
                    for (int r = 0; r < window; ++r)
                        for (int s = 0; s < window; ++s)
                            best = std::max(best,
                                            in.data[((n * H + oh * stride + r) * W +
                                                     ow * stride + s) * C + c]);
                    out.data[((n * Ho + oh) * Wo + ow) * C + c] = best;
                }
    return out;
}

inline DTensor dense(const DTensor& in, const DTensor& w, const std::vector<double>& bias) {
    const std::size_t N = in.shape[0], F = in.shape[1], U = w.shape[1];
    DTensor out{{N, U}, std::vector<double>(N * U, 0.0)};
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t u = 0; u < U; ++u) {
            double acc = bias[u];
            for (std::size_t f = 0; f < F; ++f) acc += in.data[n * F + f] * w.data[f * U + u];
            out.data[n * U + u] = acc;
        }
    return out;
}

inline DTensor relu(const DTensor& in) {
    DTensor out = in;
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return out;
}

inline DTensor softmax(const DTensor& in) {
    const std::size_t N = in.shape[0], C = in.shape[1];
    DTensor out = in;
    for (std::size_t n = 0; n < N; ++n) {
        double mx = -1e300;
        for (std::size_t c = 0; c < C; ++c) mx = std::max(mx, in.data[n * C + c]);
        double sum = 0.0;
        for (std::size_t c = 0; c < C; ++c) sum += std::exp(in.data[n * C + c] - mx);
        for (std::size_t c = 0; c < C; ++c) out.data[n * C + c] = std::exp(in.data[n * C + c] - mx) / sum;
    }
    return out;
}

inline DTensor batchnorm(const DTensor& in, const std::vector<double>& gamma,
                         const std::vector<double>& beta, const std::vector<double>& mean,
                         const std::vector<double>& var, double eps) {
    const std::size_t C = in.shape.back();
    DTensor out = in;
    for (std::size_t i = 0; i < in.size(); ++i) {
        const std::size_t c = i % C;
        out.data[i] = gamma[c] * (in.data[i] - mean[c]) / std::sqrt(var[c] + eps) + beta[c];
    }
    return out;
}

inline double weighted_sum(const DTensor& t, const std::vector<double>& weights) {
    double acc = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) acc += t.data[i] * weights[i];
    return acc;
}

// ---- PCA oracle ------------------------------------------------------------

struct PcaOracle {
    std::vector<double> eigenvalues; // descending
    double total_variance = 0.0;
    std::size_t retained_count = 0;  // smallest count reaching 95%
    double retained_ratio = 0.0;
};

inline PcaOracle pca(ocnna::MatrixView map) {
    const std::size_t H = map.rows, W = map.cols;
    Eigen::MatrixXd x(H, W);
    for (std::size_t i = 0; i < H; ++i)
        for (std::size_t j = 0; j < W; ++j) x(i, j) = map.at(i, j);

    const Eigen::RowVectorXd mean = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - mean;
    const double divisor = H > 1 ? static_cast<double>(H - 1) : 1.0;
    const Eigen::MatrixXd cov = centered.transpose() * centered / divisor;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    Eigen::VectorXd ev = solver.eigenvalues(); // ascending

    PcaOracle out;
    out.eigenvalues.resize(W);
    for (std::size_t j = 0; j < W; ++j) {
        out.eigenvalues[j] = std::max(0.0, ev(static_cast<Eigen::Index>(W - 1 - j)));
    }
    for (double v : out.eigenvalues) out.total_variance += v;
    if (out.total_variance <= 0.0) return out;

    double cum = 0.0;
    for (std::size_t j = 0; j < W; ++j) {
        cum += out.eigenvalues[j];
        ++out.retained_count;
        if (cum >= 0.95 * out.total_variance) break;
    }
    out.retained_ratio = std::min(1.0, cum / out.total_variance);
    return out;
}

} // namespace oracle

#endif
