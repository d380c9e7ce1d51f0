#include "ocnna/inference.hpp"

#include <cstring>

#include "ocnna/parallel.hpp"

namespace ocnna {

ActivationCapture::ActivationCapture(std::size_t layer_index, std::size_t filters,
                                     std::size_t images, std::size_t rows, std::size_t cols)
    : layer_index_(layer_index), filters_(filters), images_(images), rows_(rows), cols_(cols),
      data_(filters * images * rows * cols, 0.0f) {
    if (filters == 0 || images == 0 || rows == 0 || cols == 0) {
        throw ShapeError("activation capture dimensions must be positive");
    }
}

std::span<const float> ActivationCapture::map(std::size_t filter, std::size_t image) const {
    const std::size_t px = rows_ * cols_;
    return {data_.data() + (filter * images_ + image) * px, px};
}

std::span<float> ActivationCapture::map(std::size_t filter, std::size_t image) {
    const std::size_t px = rows_ * cols_;
    return {data_.data() + (filter * images_ + image) * px, px};
}

namespace {

void check_input_shape(const ModelGraph& g, const LabeledDataset& d) {
    if (d.image_shape() != g.input_shape) {
        throw ShapeError("dataset images have shape " + shape_to_string(d.image_shape()) +
                         " but model '" + g.name + "' expects " +
                         shape_to_string(g.input_shape));
    }
}

Tensor batch_images(const LabeledDataset& d, std::size_t begin, std::size_t end) {
    const std::size_t px = d.images.size() / d.images.dim(0);
    std::vector<float> data((end - begin) * px);
    std::memcpy(data.data(), d.images.data() + begin * px, data.size() * sizeof(float));
    return Tensor({end - begin, d.images.dim(1), d.images.dim(2), d.images.dim(3)},
                  std::move(data));
}

} // namespace

std::vector<std::uint32_t> predict(const ModelGraph& g, const LabeledDataset& d,
                                   int batch_size, unsigned workers) {
    if (batch_size < 1) throw ConfigError("predict: batch_size must be >= 1");
    check_input_shape(g, d);
    const std::vector<std::vector<std::size_t>> shapes = infer_shapes(g);
    if (shapes.empty() || shapes.back().size() != 1) {
        throw ShapeError("model '" + g.name + "' does not end in a class vector");
    }

    const std::size_t n = d.size();
    const std::size_t bs = static_cast<std::size_t>(batch_size);
    const std::size_t batches = (n + bs - 1) / bs;
    std::vector<std::uint32_t> out(n);

    parallel_for(batches, workers, [&](std::size_t b) {
        const std::size_t begin = b * bs;
        const std::size_t end = std::min(n, begin + bs);
        Tensor x = batch_images(d, begin, end);
        for (const LayerSpec& layer : g.layers) x = forward_layer(layer, x);
        const std::size_t classes = x.dim(1);
        for (std::size_t i = 0; i < end - begin; ++i) {
            const float* row = x.data() + i * classes;
            std::uint32_t best = 0;
            for (std::size_t c = 1; c < classes; ++c) {
                if (row[c] > row[best]) best = static_cast<std::uint32_t>(c);
            }
            out[begin + i] = best;
        }
    });
    return out;
}

ActivationCapture capture_activations(const ModelGraph& g, const LabeledDataset& d,
                                      std::size_t layer_index, unsigned workers,
                                      int batch_size) {
    if (batch_size < 1) throw ConfigError("capture: batch_size must be >= 1");
    if (layer_index >= g.layers.size()) {
        throw ConfigError("capture: layer index " + std::to_string(layer_index) +
                          " out of range for " + std::to_string(g.layers.size()) + " layers");
    }
    if (!g.layers[layer_index].is_conv()) {
        throw ConfigError("capture: layer " + std::to_string(layer_index) + " is " +
                          layer_kind_name(g.layers[layer_index].kind) +
                          ", activation capture needs a conv2d layer");
    }
    check_input_shape(g, d);

    const std::vector<std::vector<std::size_t>> shapes = infer_shapes(g);
    const std::vector<std::size_t>& conv_shape = shapes[layer_index];
    const std::size_t rows = conv_shape[0], cols = conv_shape[1], filters = conv_shape[2];

    // The captured map is the conv output pushed through any elementwise
    // layers (batchnorm, relu) that immediately follow it.
    std::size_t last = layer_index;
    while (last + 1 < g.layers.size() &&
           (g.layers[last + 1].kind == LayerKind::BatchNorm ||
            g.layers[last + 1].kind == LayerKind::Relu)) {
        ++last;
    }

    const std::size_t n = d.size();
    const std::size_t bs = static_cast<std::size_t>(batch_size);
    const std::size_t batches = (n + bs - 1) / bs;
    ActivationCapture cap(layer_index, filters, n, rows, cols);

    parallel_for(batches, workers, [&](std::size_t b) {
        const std::size_t begin = b * bs;
        const std::size_t end = std::min(n, begin + bs);
        Tensor x = batch_images(d, begin, end);
        for (std::size_t li = 0; li <= last; ++li) x = forward_layer(g.layers[li], x);
        // x is [B, rows, cols, filters]; scatter into filter-major storage
        const float* src = x.data();
        for (std::size_t i = 0; i < end - begin; ++i) {
            for (std::size_t m = 0; m < filters; ++m) {
                float* dst = cap.map(m, begin + i).data();
                for (std::size_t r = 0; r < rows; ++r) {
                    for (std::size_t c = 0; c < cols; ++c) {
                        dst[r * cols + c] = src[((i * rows + r) * cols + c) * filters + m];
                    }
                }
            }
        }
    });
    return cap;
}

double accuracy(std::span<const std::uint32_t> predictions,
                std::span<const std::uint32_t> labels) {
    if (predictions.size() != labels.size()) {
        throw ShapeError("accuracy: " + std::to_string(predictions.size()) +
                         " predictions vs " + std::to_string(labels.size()) + " labels");
    }
    if (predictions.empty()) throw ConfigError("accuracy: empty prediction set");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] == labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

} // namespace ocnna
