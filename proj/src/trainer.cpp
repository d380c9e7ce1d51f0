#include "ocnna/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ocnna/ops.hpp"
#include "ocnna/rng.hpp"

namespace ocnna {

namespace {

void check_config(const TrainConfig& cfg) {
    if (cfg.learning_rate < 0.0f) throw ConfigError("learning_rate must be >= 0");
    if (!(cfg.momentum >= 0.0f && cfg.momentum < 1.0f)) {
        throw ConfigError("momentum must lie in [0,1)");
    }
    if (cfg.weight_decay < 0.0f) throw ConfigError("weight_decay must be >= 0");
    if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
}

Tensor gather_batch(const LabeledDataset& d, std::span<const std::size_t> idx) {
    const std::size_t px = d.images.size() / d.images.dim(0);
    std::vector<float> data(idx.size() * px);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const float* src = d.images.data() + idx[i] * px;
        std::copy(src, src + px, data.data() + i * px);
    }
    return Tensor({idx.size(), d.images.dim(1), d.images.dim(2), d.images.dim(3)},
                  std::move(data));
}

// v = momentum*v - lr*grad; w = (w + v)*(1 - weight_decay)
// Decay applies to kernels/weights only; biases and batchnorm affine terms
// are exempt so constants are absorbed there instead of in filter channels.
void sgd_update(Tensor& w, Tensor& v, const Tensor& grad, const TrainConfig& cfg,
                bool decayed) {
    const float lr = cfg.learning_rate, mom = cfg.momentum;
    const float decay = decayed ? 1.0f - cfg.weight_decay : 1.0f;
    for (std::size_t i = 0; i < w.size(); ++i) {
        v[i] = mom * v[i] - lr * grad[i];
        w[i] = (w[i] + v[i]) * decay;
    }
}

// Cross-entropy on logits with fused softmax (log-sum-exp); returns the
// summed loss and writes d(loss)/d(logits) scaled by 1/batch.
double softmax_xent(const Tensor& logits, std::span<const std::uint32_t> labels,
                    Tensor& dlogits) {
    const std::size_t B = logits.dim(0), C = logits.dim(1);
    const double inv_b = 1.0 / static_cast<double>(B);
    double total = 0.0;
    for (std::size_t n = 0; n < B; ++n) {
        const float* z = logits.data() + n * C;
        float* dz = dlogits.data() + n * C;
        double mx = z[0];
        for (std::size_t c = 1; c < C; ++c) mx = std::max<double>(mx, z[c]);
        double sum = 0.0;
        for (std::size_t c = 0; c < C; ++c) sum += std::exp(z[c] - mx);
        const double lse = std::log(sum) + mx;
        total += lse - z[labels[n]];
        for (std::size_t c = 0; c < C; ++c) {
            const double p = std::exp(z[c] - lse);
            dz[c] = static_cast<float>((p - (labels[n] == c ? 1.0 : 0.0)) * inv_b);
        }
    }
    return total;
}

} // namespace

TrainResult train(const ModelGraph& g, const LabeledDataset& d, const TrainConfig& cfg) {
    check_config(cfg);
    d.validate();
    if (d.image_shape() != g.input_shape) {
        throw ShapeError("dataset images have shape " + shape_to_string(d.image_shape()) +
                         " but model '" + g.name + "' expects " +
                         shape_to_string(g.input_shape));
    }
    const auto shapes = infer_shapes(g);
    if (shapes.back() != std::vector<std::size_t>{d.class_count}) {
        throw ConfigError("model '" + g.name + "' produces " +
                          shape_to_string(shapes.back()) + " outputs but the dataset has " +
                          std::to_string(d.class_count) + " classes");
    }
    if (g.layers.empty() || g.layers.back().kind != LayerKind::Softmax) {
        throw ConfigError("training expects the model to end in a softmax layer");
    }

    TrainResult result;
    result.model = g;
    ModelGraph& model = result.model;
    const std::size_t L = model.layers.size();

    // momentum buffers per trainable tensor
    std::vector<Tensor> v_kernel(L), v_bias(L), v_gamma(L), v_beta(L);
    for (std::size_t i = 0; i < L; ++i) {
        const LayerSpec& l = model.layers[i];
        if (l.kind == LayerKind::Conv2d || l.kind == LayerKind::Dense) {
            v_kernel[i] = Tensor(l.kernel.shape());
            v_bias[i] = Tensor(l.bias.shape());
        } else if (l.kind == LayerKind::BatchNorm) {
            v_gamma[i] = Tensor(l.gamma.shape());
            v_beta[i] = Tensor(l.beta.shape());
        }
    }

    Rng rng(cfg.seed);
    const std::size_t n = d.size();
    const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    std::vector<Tensor> inputs(L); // input seen by each layer during forward

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;

        for (std::size_t start = 0; start < n; start += bs) {
            const std::size_t end = std::min(n, start + bs);
            const std::span<const std::size_t> idx(order.data() + start, end - start);
            Tensor x = gather_batch(d, idx);
            std::vector<std::uint32_t> labels(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) labels[i] = d.labels[idx[i]];

            // forward up to the logits; the final softmax is fused with the loss
            for (std::size_t li = 0; li + 1 < L; ++li) {
                inputs[li] = std::move(x);
                x = forward_layer(model.layers[li], inputs[li]);
            }

            Tensor grad(x.shape());
            epoch_loss += softmax_xent(x, labels, grad);

            for (std::size_t li = L - 1; li-- > 0;) {
                LayerSpec& l = model.layers[li];
                switch (l.kind) {
                    case LayerKind::Conv2d: {
                        Conv2dGrads gr =
                            conv2d_backward(inputs[li], l.kernel, l.stride, l.padding, grad);
                        sgd_update(l.kernel, v_kernel[li], gr.kernel, cfg, true);
                        sgd_update(l.bias, v_bias[li], gr.bias, cfg, false);
                        grad = std::move(gr.input);
                        break;
                    }
                    case LayerKind::Dense: {
                        DenseGrads gr = dense_backward(inputs[li], l.kernel, grad);
                        sgd_update(l.kernel, v_kernel[li], gr.weights, cfg, true);
                        sgd_update(l.bias, v_bias[li], gr.bias, cfg, false);
                        grad = std::move(gr.input);
                        break;
                    }
                    case LayerKind::BatchNorm: {
                        BatchnormGrads gr = batchnorm_backward(
                            inputs[li], l.gamma, l.moving_mean, l.moving_var, l.epsilon, grad);
                        sgd_update(l.gamma, v_gamma[li], gr.gamma, cfg, true);
                        sgd_update(l.beta, v_beta[li], gr.beta, cfg, false);
                        grad = std::move(gr.input);
                        break;
                    }
                    case LayerKind::MaxPool:
                        grad = maxpool2d_backward(inputs[li], l.window, l.stride, grad);
                        break;
                    case LayerKind::Relu:
                        grad = relu_backward(inputs[li], grad);
                        break;
                    case LayerKind::Flatten:
                        grad = flatten_backward(inputs[li], grad);
                        break;
                    case LayerKind::Softmax:
                        throw ConfigError("softmax layers are only supported as the final layer");
                }
            }
        }

        const double mean_loss = epoch_loss / static_cast<double>(n);
        if (!std::isfinite(mean_loss)) {
            throw NumericError("training diverged at epoch " + std::to_string(epoch + 1) +
                               ": loss is not finite");
        }
        result.loss_history.push_back(mean_loss);
    }
    return result;
}

void initialize_weights(ModelGraph& g, std::uint64_t seed) {
    Rng rng(seed);
    for (LayerSpec& l : g.layers) {
        switch (l.kind) {
            case LayerKind::Conv2d:
            case LayerKind::Dense: {
                const std::size_t fan_in = l.kind == LayerKind::Conv2d
                    ? l.kernel.dim(0) * l.kernel.dim(1) * l.kernel.dim(2)
                    : l.kernel.dim(0);
                const float limit = std::sqrt(6.0f / static_cast<float>(fan_in));
                for (std::size_t i = 0; i < l.kernel.size(); ++i) {
                    l.kernel[i] = rng.uniform(-limit, limit);
                }
                for (std::size_t i = 0; i < l.bias.size(); ++i) l.bias[i] = 0.0f;
                break;
            }
            case LayerKind::BatchNorm:
                for (std::size_t i = 0; i < l.gamma.size(); ++i) {
                    l.gamma[i] = 1.0f;
                    l.beta[i] = 0.0f;
                    l.moving_mean[i] = 0.0f;
                    l.moving_var[i] = 1.0f;
                }
                break;
            default:
                break;
        }
    }
}

LabeledDataset make_synthetic_dataset(int classes, int per_class, int size,
                                      std::uint64_t seed) {
    if (classes < 1) throw ConfigError("make_synthetic_dataset: classes must be >= 1");
    if (per_class < 1) throw ConfigError("make_synthetic_dataset: per_class must be >= 1");
    if (size < 1) throw ConfigError("make_synthetic_dataset: size must be >= 1");

    const std::size_t n = static_cast<std::size_t>(classes) * per_class;
    const std::size_t s = static_cast<std::size_t>(size);
    Rng rng(seed);
    std::vector<float> images(n * s * s);
    std::vector<std::uint32_t> labels(n);

    constexpr float kTau = 6.2831853071795864769f;
    std::size_t img = 0;
    for (int c = 0; c < classes; ++c) {
        // each class gets its own grating orientation and spatial frequency
        const float theta = 3.14159265358979323846f * static_cast<float>(c) / classes;
        const float freq = 2.0f + static_cast<float>(c % 5);
        const float dx = std::cos(theta) * freq * kTau / size;
        const float dy = std::sin(theta) * freq * kTau / size;

        for (int p = 0; p < per_class; ++p, ++img) {
            labels[img] = static_cast<std::uint32_t>(c);
            const float phase = rng.uniform(0.0f, kTau);
            // log-uniform contrast in [0.2, 1.0]
            const float contrast = 0.2f * std::exp(rng.uniform(0.0f, 1.6094379f));
            float* px = images.data() + img * s * s;
            for (std::size_t y = 0; y < s; ++y) {
                for (std::size_t x = 0; x < s; ++x) {
                    // zero-mean grating at a per-image contrast plus low-power
                    // pixel noise; the pattern, not a DC offset, carries class info
                    float v = contrast * std::sin(dx * x + dy * y + phase) +
                              0.02f * rng.normal();
                    px[y * s + x] = std::clamp(v, -1.0f, 1.0f);
                }
            }
        }
    }

    LabeledDataset d;
    d.images = Tensor({n, s, s, 1}, std::move(images));
    d.labels = std::move(labels);
    d.class_count = static_cast<std::uint32_t>(classes);
    return d;
}

} // namespace ocnna
