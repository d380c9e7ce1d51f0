#include "ocnna/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ocnna {

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* role) {
    if (t.rank() != rank) {
        throw ShapeError(std::string(op) + ": " + role + " must have rank " +
                         std::to_string(rank) + ", got shape " + t.shape_str());
    }
}

struct Pad {
    std::size_t out;
    long top; // also used for left
};

Pad pad_for(std::size_t in, std::size_t k, int stride, Padding padding) {
    if (padding == Padding::Valid) {
        if (in < k) {
            throw ShapeError("conv2d: kernel size " + std::to_string(k) +
                             " exceeds input extent " + std::to_string(in) +
                             " with valid padding");
        }
        return {(in - k) / static_cast<std::size_t>(stride) + 1, 0};
    }
    const std::size_t out = (in + stride - 1) / stride;
    const long total = std::max<long>(0, static_cast<long>((out - 1) * stride + k) - static_cast<long>(in));
    return {out, total / 2};
}

} // namespace

std::size_t conv_out_dim(std::size_t in, std::size_t k, int stride, Padding padding) {
    return pad_for(in, k, stride, padding).out;
}

std::size_t pool_out_dim(std::size_t in, int window, int stride) {
    if (in < static_cast<std::size_t>(window)) {
        throw ShapeError("maxpool: window " + std::to_string(window) +
                         " exceeds input extent " + std::to_string(in));
    }
    return (in - window) / stride + 1;
}

Tensor conv2d_forward(const Tensor& input, const Tensor& kernel, const Tensor& bias,
                      int stride, Padding padding) {
    require_rank(input, 4, "conv2d", "input");
    require_rank(kernel, 4, "conv2d", "kernel");
    require_rank(bias, 1, "conv2d", "bias");
    if (stride < 1) throw ConfigError("conv2d: stride must be >= 1");

    const std::size_t N = input.dim(0), H = input.dim(1), W = input.dim(2), Cin = input.dim(3);
    const std::size_t kh = kernel.dim(0), kw = kernel.dim(1);
    if (kernel.dim(2) != Cin) {
        throw ShapeError("conv2d: input channel axis is " + std::to_string(Cin) +
                         " but kernel expects " + std::to_string(kernel.dim(2)) +
                         " input channels (input " + input.shape_str() +
                         ", kernel " + kernel.shape_str() + ")");
    }
    const std::size_t Cout = kernel.dim(3);
    if (bias.dim(0) != Cout) {
        throw ShapeError("conv2d: bias has " + std::to_string(bias.dim(0)) +
                         " entries but kernel produces " + std::to_string(Cout) + " channels");
    }

    const Pad ph = pad_for(H, kh, stride, padding);
    const Pad pw = pad_for(W, kw, stride, padding);

    Tensor out({N, ph.out, pw.out, Cout});
    std::vector<double> acc(Cout);
    const float* in = input.data();
    const float* k = kernel.data();
    float* o = out.data();

    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t oh = 0; oh < ph.out; ++oh) {
            for (std::size_t ow = 0; ow < pw.out; ++ow) {
                for (std::size_t c = 0; c < Cout; ++c) acc[c] = bias[c];
                for (std::size_t r = 0; r < kh; ++r) {
                    const long ih = static_cast<long>(oh) * stride + static_cast<long>(r) - ph.top;
                    if (ih < 0 || ih >= static_cast<long>(H)) continue;
                    for (std::size_t s = 0; s < kw; ++s) {
                        const long iw = static_cast<long>(ow) * stride + static_cast<long>(s) - pw.top;
                        if (iw < 0 || iw >= static_cast<long>(W)) continue;
                        const float* in_px = in + ((n * H + ih) * W + iw) * Cin;
                        const float* k_rs = k + (r * kw + s) * Cin * Cout;
                        for (std::size_t ci = 0; ci < Cin; ++ci) {
                            const double v = in_px[ci];
                            const float* k_c = k_rs + ci * Cout;
                            for (std::size_t co = 0; co < Cout; ++co) {
                                acc[co] += v * k_c[co];
                            }
                        }
                    }
                }
                float* o_px = o + ((n * ph.out + oh) * pw.out + ow) * Cout;
                for (std::size_t c = 0; c < Cout; ++c) o_px[c] = static_cast<float>(acc[c]);
            }
        }
    }
    return out;
}

Tensor maxpool2d(const Tensor& input, int window, int stride) {
    require_rank(input, 4, "maxpool", "input");
    if (window < 1 || stride < 1) throw ConfigError("maxpool: window and stride must be >= 1");
    const std::size_t N = input.dim(0), H = input.dim(1), W = input.dim(2), C = input.dim(3);
    const std::size_t Ho = pool_out_dim(H, window, stride);
    const std::size_t Wo = pool_out_dim(W, window, stride);

    Tensor out({N, Ho, Wo, C});
    const float* in = input.data();
    float* o = out.data();
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t oh = 0; oh < Ho; ++oh) {
            for (std::size_t ow = 0; ow < Wo; ++ow) {
                float* o_px = o + ((n * Ho + oh) * Wo + ow) * C;
                for (std::size_t c = 0; c < C; ++c) o_px[c] = -std::numeric_limits<float>::infinity();
                for (int r = 0; r < window; ++r) {
                    for (int s = 0; s < window; ++s) {
                        const std::size_t ih = oh * stride + r;
                        const std::size_t iw = ow * stride + s;
                        const float* in_px = in + ((n * H + ih) * W + iw) * C;
                        for (std::size_t c = 0; c < C; ++c) {
                            o_px[c] = std::max(o_px[c], in_px[c]);
                        }
                    }
                }
            }
        }
    }
    return out;
}

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    require_rank(input, 2, "dense", "input");
    require_rank(weights, 2, "dense", "weights");
    require_rank(bias, 1, "dense", "bias");
    const std::size_t N = input.dim(0), F = input.dim(1);
    if (weights.dim(0) != F) {
        throw ShapeError("dense: input features axis is " + std::to_string(F) +
                         " but weights expect " + std::to_string(weights.dim(0)) + " rows");
    }
    const std::size_t U = weights.dim(1);
    if (bias.dim(0) != U) {
        throw ShapeError("dense: bias has " + std::to_string(bias.dim(0)) +
                         " entries but weights produce " + std::to_string(U) + " units");
    }

    Tensor out({N, U});
    std::vector<double> acc(U);
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t u = 0; u < U; ++u) acc[u] = bias[u];
        const float* x = input.data() + n * F;
        for (std::size_t f = 0; f < F; ++f) {
            const double v = x[f];
            const float* w = weights.data() + f * U;
            for (std::size_t u = 0; u < U; ++u) acc[u] += v * w[u];
        }
        float* o = out.data() + n * U;
        for (std::size_t u = 0; u < U; ++u) o[u] = static_cast<float>(acc[u]);
    }
    return out;
}

Tensor relu(const Tensor& t) {
    Tensor out(t.shape());
    for (std::size_t i = 0; i < t.size(); ++i) out[i] = t[i] > 0.0f ? t[i] : 0.0f;
    return out;
}

Tensor softmax(const Tensor& t) {
    require_rank(t, 2, "softmax", "input");
    const std::size_t N = t.dim(0), C = t.dim(1);
    Tensor out({N, C});
    for (std::size_t n = 0; n < N; ++n) {
        const float* x = t.data() + n * C;
        float* o = out.data() + n * C;
        float mx = x[0];
        for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, x[c]);
        double sum = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
            const double e = std::exp(static_cast<double>(x[c]) - mx);
            o[c] = static_cast<float>(e);
            sum += e;
        }
        for (std::size_t c = 0; c < C; ++c) o[c] = static_cast<float>(o[c] / sum);
    }
    return out;
}

Tensor batchnorm_forward(const Tensor& t, const Tensor& gamma, const Tensor& beta,
                         const Tensor& mean, const Tensor& var, float eps) {
    if (t.rank() < 1) throw ShapeError("batchnorm: input must have rank >= 1");
    const std::size_t C = t.shape().back();
    for (const Tensor* p : {&gamma, &beta, &mean, &var}) {
        if (p->rank() != 1 || p->dim(0) != C) {
            throw ShapeError("batchnorm: per-channel parameter shape " + p->shape_str() +
                             " does not match " + std::to_string(C) + " channels");
        }
    }
    std::vector<float> scale(C), shift(C);
    for (std::size_t c = 0; c < C; ++c) {
        const double denom = std::sqrt(static_cast<double>(var[c]) + eps);
        if (!(denom > 0.0) || !std::isfinite(denom)) {
            throw NumericError("batchnorm: variance + eps must be positive at channel " +
                               std::to_string(c));
        }
        scale[c] = static_cast<float>(gamma[c] / denom);
        shift[c] = static_cast<float>(beta[c] - mean[c] * gamma[c] / denom);
    }
    Tensor out(t.shape());
    const std::size_t n = t.size();
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i % C;
        out[i] = t[i] * scale[c] + shift[c];
    }
    return out;
}

Tensor flatten(const Tensor& t) {
    if (t.rank() < 2) throw ShapeError("flatten: input must have rank >= 2, got " + t.shape_str());
    const std::size_t N = t.dim(0);
    std::vector<float> data(t.values().begin(), t.values().end());
    return Tensor({N, t.size() / N}, std::move(data));
}

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernel,
                            int stride, Padding padding, const Tensor& upstream) {
    require_rank(input, 4, "conv2d_backward", "input");
    require_rank(kernel, 4, "conv2d_backward", "kernel");
    require_rank(upstream, 4, "conv2d_backward", "upstream");

    const std::size_t N = input.dim(0), H = input.dim(1), W = input.dim(2), Cin = input.dim(3);
    const std::size_t kh = kernel.dim(0), kw = kernel.dim(1), Cout = kernel.dim(3);
    const Pad ph = pad_for(H, kh, stride, padding);
    const Pad pw = pad_for(W, kw, stride, padding);
    if (upstream.dim(0) != N || upstream.dim(1) != ph.out || upstream.dim(2) != pw.out ||
        upstream.dim(3) != Cout) {
        throw ShapeError("conv2d_backward: upstream shape " + upstream.shape_str() +
                         " does not match forward output");
    }

    Conv2dGrads g{Tensor(input.shape()), Tensor(kernel.shape()), Tensor({Cout})};
    std::vector<double> dk(kernel.size(), 0.0), db(Cout, 0.0), dx(input.size(), 0.0);
    const float* in = input.data();
    const float* k = kernel.data();
    const float* up = upstream.data();

    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t oh = 0; oh < ph.out; ++oh) {
            for (std::size_t ow = 0; ow < pw.out; ++ow) {
                const float* g_px = up + ((n * ph.out + oh) * pw.out + ow) * Cout;
                for (std::size_t co = 0; co < Cout; ++co) db[co] += g_px[co];
                for (std::size_t r = 0; r < kh; ++r) {
                    const long ih = static_cast<long>(oh) * stride + static_cast<long>(r) - ph.top;
                    if (ih < 0 || ih >= static_cast<long>(H)) continue;
                    for (std::size_t s = 0; s < kw; ++s) {
                        const long iw = static_cast<long>(ow) * stride + static_cast<long>(s) - pw.top;
                        if (iw < 0 || iw >= static_cast<long>(W)) continue;
                        const std::size_t in_off = ((n * H + ih) * W + iw) * Cin;
                        const std::size_t k_off = (r * kw + s) * Cin * Cout;
                        for (std::size_t ci = 0; ci < Cin; ++ci) {
                            const double x = in[in_off + ci];
                            const float* k_c = k + k_off + ci * Cout;
                            double dxi = 0.0;
                            for (std::size_t co = 0; co < Cout; ++co) {
                                const double gv = g_px[co];
                                dk[k_off + ci * Cout + co] += x * gv;
                                dxi += k_c[co] * gv;
                            }
                            dx[in_off + ci] += dxi;
                        }
                    }
                }
            }
        }
    }
    for (std::size_t i = 0; i < dk.size(); ++i) g.kernel[i] = static_cast<float>(dk[i]);
    for (std::size_t i = 0; i < db.size(); ++i) g.bias[i] = static_cast<float>(db[i]);
    for (std::size_t i = 0; i < dx.size(); ++i) g.input[i] = static_cast<float>(dx[i]);
    return g;
}

Tensor maxpool2d_backward(const Tensor& input, int window, int stride, const Tensor& upstream) {
    const std::size_t N = input.dim(0), H = input.dim(1), W = input.dim(2), C = input.dim(3);
    const std::size_t Ho = pool_out_dim(H, window, stride);
    const std::size_t Wo = pool_out_dim(W, window, stride);
    if (upstream.shape() != std::vector<std::size_t>{N, Ho, Wo, C}) {
        throw ShapeError("maxpool_backward: upstream shape " + upstream.shape_str() +
                         " does not match forward output");
    }
    Tensor grad(input.shape());
    const float* in = input.data();
    const float* up = upstream.data();
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t oh = 0; oh < Ho; ++oh) {
            for (std::size_t ow = 0; ow < Wo; ++ow) {
                for (std::size_t c = 0; c < C; ++c) {
                    float best = -std::numeric_limits<float>::infinity();
                    std::size_t best_off = 0;
                    for (int r = 0; r < window; ++r) {
                        for (int s = 0; s < window; ++s) {
                            const std::size_t off =
                                ((n * H + oh * stride + r) * W + ow * stride + s) * C + c;
                            if (in[off] > best) {
                                best = in[off];
                                best_off = off;
                            }
                        }
                    }
                    grad[best_off] += up[((n * Ho + oh) * Wo + ow) * C + c];
                }
            }
        }
    }
    return grad;
}

DenseGrads dense_backward(const Tensor& input, const Tensor& weights, const Tensor& upstream) {
    const std::size_t N = input.dim(0), F = input.dim(1), U = weights.dim(1);
    if (upstream.shape() != std::vector<std::size_t>{N, U}) {
        throw ShapeError("dense_backward: upstream shape " + upstream.shape_str() +
                         " does not match forward output");
    }
    DenseGrads g{Tensor({N, F}), Tensor({F, U}), Tensor({U})};
    std::vector<double> dw(F * U, 0.0), db(U, 0.0);
    for (std::size_t n = 0; n < N; ++n) {
        const float* x = input.data() + n * F;
        const float* gu = upstream.data() + n * U;
        for (std::size_t u = 0; u < U; ++u) db[u] += gu[u];
        for (std::size_t f = 0; f < F; ++f) {
            const double xv = x[f];
            const float* w = weights.data() + f * U;
            double dxf = 0.0;
            for (std::size_t u = 0; u < U; ++u) {
                dw[f * U + u] += xv * gu[u];
                dxf += w[u] * gu[u];
            }
            g.input[n * F + f] = static_cast<float>(dxf);
        }
    }
    for (std::size_t i = 0; i < dw.size(); ++i) g.weights[i] = static_cast<float>(dw[i]);
    for (std::size_t i = 0; i < db.size(); ++i) g.bias[i] = static_cast<float>(db[i]);
    return g;
}

Tensor relu_backward(const Tensor& input, const Tensor& upstream) {
    if (!input.same_shape(upstream)) {
        throw ShapeError("relu_backward: upstream shape " + upstream.shape_str() +
                         " does not match input " + input.shape_str());
    }
    Tensor grad(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i) {
        grad[i] = input[i] > 0.0f ? upstream[i] : 0.0f;
    }
    return grad;
}

Tensor softmax_backward(const Tensor& output, const Tensor& upstream) {
    if (!output.same_shape(upstream)) {
        throw ShapeError("softmax_backward: upstream shape " + upstream.shape_str() +
                         " does not match output " + output.shape_str());
    }
    const std::size_t N = output.dim(0), C = output.dim(1);
    Tensor grad({N, C});
    for (std::size_t n = 0; n < N; ++n) {
        const float* s = output.data() + n * C;
        const float* g = upstream.data() + n * C;
        double dot = 0.0;
        for (std::size_t c = 0; c < C; ++c) dot += static_cast<double>(g[c]) * s[c];
        for (std::size_t c = 0; c < C; ++c) {
            grad[n * C + c] = static_cast<float>(s[c] * (g[c] - dot));
        }
    }
    return grad;
}

BatchnormGrads batchnorm_backward(const Tensor& input, const Tensor& gamma,
                                  const Tensor& mean, const Tensor& var, float eps,
                                  const Tensor& upstream) {
    if (!input.same_shape(upstream)) {
        throw ShapeError("batchnorm_backward: upstream shape " + upstream.shape_str() +
                         " does not match input " + input.shape_str());
    }
    const std::size_t C = input.shape().back();
    BatchnormGrads g{Tensor(input.shape()), Tensor({C}), Tensor({C})};
    std::vector<double> inv_std(C), dgamma(C, 0.0), dbeta(C, 0.0);
    for (std::size_t c = 0; c < C; ++c) {
        inv_std[c] = 1.0 / std::sqrt(static_cast<double>(var[c]) + eps);
    }
    const std::size_t n = input.size();
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i % C;
        const double xhat = (input[i] - mean[c]) * inv_std[c];
        dgamma[c] += upstream[i] * xhat;
        dbeta[c] += upstream[i];
        g.input[i] = static_cast<float>(upstream[i] * gamma[c] * inv_std[c]);
    }
    for (std::size_t c = 0; c < C; ++c) {
        g.gamma[c] = static_cast<float>(dgamma[c]);
        g.beta[c] = static_cast<float>(dbeta[c]);
    }
    return g;
}

Tensor flatten_backward(const Tensor& input, const Tensor& upstream) {
    if (upstream.size() != input.size()) {
        throw ShapeError("flatten_backward: upstream has " + std::to_string(upstream.size()) +
                         " elements but input has " + std::to_string(input.size()));
    }
    std::vector<float> data(upstream.values().begin(), upstream.values().end());
    return Tensor(input.shape(), std::move(data));
}

} // namespace ocnna
