#include "ocnna/model.hpp"

#include <string>

namespace ocnna {

const char* layer_kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::Conv2d: return "conv2d";
        case LayerKind::MaxPool: return "maxpool";
        case LayerKind::Dense: return "dense";
        case LayerKind::Flatten: return "flatten";
        case LayerKind::Relu: return "relu";
        case LayerKind::Softmax: return "softmax";
        case LayerKind::BatchNorm: return "batchnorm";
    }
    return "unknown";
}

LayerKind layer_kind_from_name(const std::string& name) {
    if (name == "conv2d") return LayerKind::Conv2d;
    if (name == "maxpool") return LayerKind::MaxPool;
    if (name == "dense") return LayerKind::Dense;
    if (name == "flatten") return LayerKind::Flatten;
    if (name == "relu") return LayerKind::Relu;
    if (name == "softmax") return LayerKind::Softmax;
    if (name == "batchnorm") return LayerKind::BatchNorm;
    throw ManifestError("unknown layer kind '" + name + "'");
}

std::size_t LayerSpec::filter_count() const {
    if (kind != LayerKind::Conv2d) {
        throw ConfigError("filter_count: layer '" + name + "' is " +
                          layer_kind_name(kind) + ", not conv2d");
    }
    return kernel.dim(3);
}

std::size_t LayerSpec::parameter_count() const {
    switch (kind) {
        case LayerKind::Conv2d:
        case LayerKind::Dense:
            return kernel.size() + bias.size();
        case LayerKind::BatchNorm:
            return gamma.size() + beta.size();
        default:
            return 0;
    }
}

std::vector<std::size_t> ModelGraph::conv_layer_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].is_conv()) out.push_back(i);
    }
    return out;
}

namespace {

std::string layer_label(const ModelGraph& g, std::size_t i) {
    const LayerSpec& l = g.layers[i];
    std::string label = "layer " + std::to_string(i) + " (" + layer_kind_name(l.kind);
    if (!l.name.empty()) label += " '" + l.name + "'";
    return label + ")";
}

std::string producer_label(const ModelGraph& g, std::size_t i) {
    return i == 0 ? std::string("the model input") : layer_label(g, i - 1);
}

} // namespace

std::vector<std::vector<std::size_t>> infer_shapes(const ModelGraph& g) {
    if (g.input_shape.size() != 3) {
        throw ShapeError("model '" + g.name + "': input shape must be [H,W,C], got " +
                         shape_to_string(g.input_shape));
    }
    std::vector<std::vector<std::size_t>> shapes;
    shapes.reserve(g.layers.size());
    std::vector<std::size_t> cur = g.input_shape;

    for (std::size_t i = 0; i < g.layers.size(); ++i) {
        const LayerSpec& l = g.layers[i];
        switch (l.kind) {
            case LayerKind::Conv2d: {
                if (cur.size() != 3) {
                    throw ShapeError(layer_label(g, i) + " needs a [H,W,C] input but " +
                                     producer_label(g, i) + " produces " + shape_to_string(cur));
                }
                if (l.kernel.rank() != 4) {
                    throw ShapeError(layer_label(g, i) + ": kernel must be [kh,kw,Cin,Cout], got " +
                                     l.kernel.shape_str());
                }
                if (l.kernel.dim(2) != cur[2]) {
                    throw ShapeError(layer_label(g, i) + " expects " +
                                     std::to_string(l.kernel.dim(2)) + " input channels but " +
                                     producer_label(g, i) + " produces " + std::to_string(cur[2]));
                }
                if (l.bias.rank() != 1 || l.bias.dim(0) != l.kernel.dim(3)) {
                    throw ShapeError(layer_label(g, i) + ": bias shape " + l.bias.shape_str() +
                                     " does not match " + std::to_string(l.kernel.dim(3)) +
                                     " filters");
                }
                cur = {conv_out_dim(cur[0], l.kernel.dim(0), l.stride, l.padding),
                       conv_out_dim(cur[1], l.kernel.dim(1), l.stride, l.padding),
                       l.kernel.dim(3)};
                break;
            }
            case LayerKind::MaxPool: {
                if (cur.size() != 3) {
                    throw ShapeError(layer_label(g, i) + " needs a [H,W,C] input but " +
                                     producer_label(g, i) + " produces " + shape_to_string(cur));
                }
                cur = {pool_out_dim(cur[0], l.window, l.stride),
                       pool_out_dim(cur[1], l.window, l.stride), cur[2]};
                break;
            }
            case LayerKind::Dense: {
                if (cur.size() != 1) {
                    throw ShapeError(layer_label(g, i) + " needs a flat input but " +
                                     producer_label(g, i) + " produces " + shape_to_string(cur));
                }
                if (l.kernel.rank() != 2) {
                    throw ShapeError(layer_label(g, i) + ": weights must be [F,U], got " +
                                     l.kernel.shape_str());
                }
                if (l.kernel.dim(0) != cur[0]) {
                    throw ShapeError(layer_label(g, i) + " expects " +
                                     std::to_string(l.kernel.dim(0)) + " input features but " +
                                     producer_label(g, i) + " produces " + std::to_string(cur[0]));
                }
                if (l.bias.rank() != 1 || l.bias.dim(0) != l.kernel.dim(1)) {
                    throw ShapeError(layer_label(g, i) + ": bias shape " + l.bias.shape_str() +
                                     " does not match " + std::to_string(l.kernel.dim(1)) +
                                     " units");
                }
                cur = {l.kernel.dim(1)};
                break;
            }
            case LayerKind::Flatten: {
                cur = {shape_product(cur)};
                break;
            }
            case LayerKind::Relu:
                break;
            case LayerKind::Softmax: {
                if (cur.size() != 1) {
                    throw ShapeError(layer_label(g, i) + " needs a flat input but " +
                                     producer_label(g, i) + " produces " + shape_to_string(cur));
                }
                break;
            }
            case LayerKind::BatchNorm: {
                if (cur.empty()) {
                    throw ShapeError(layer_label(g, i) + " needs a channelled input");
                }
                const std::size_t C = cur.back();
                for (const Tensor* p : {&l.gamma, &l.beta, &l.moving_mean, &l.moving_var}) {
                    if (p->rank() != 1 || p->dim(0) != C) {
                        throw ShapeError(layer_label(g, i) + ": per-channel parameter shape " +
                                         p->shape_str() + " does not match the " +
                                         std::to_string(C) + " channels produced by " +
                                         producer_label(g, i));
                    }
                }
                break;
            }
        }
        shapes.push_back(cur);
    }
    return shapes;
}

std::uint64_t count_parameters(const ModelGraph& g) {
    std::uint64_t total = 0;
    for (const LayerSpec& l : g.layers) total += l.parameter_count();
    return total;
}

Tensor forward_layer(const LayerSpec& layer, const Tensor& input) {
    switch (layer.kind) {
        case LayerKind::Conv2d:
            return conv2d_forward(input, layer.kernel, layer.bias, layer.stride, layer.padding);
        case LayerKind::MaxPool:
            return maxpool2d(input, layer.window, layer.stride);
        case LayerKind::Dense:
            return dense_forward(input, layer.kernel, layer.bias);
        case LayerKind::Flatten:
            return flatten(input);
        case LayerKind::Relu:
            return relu(input);
        case LayerKind::Softmax:
            return softmax(input);
        case LayerKind::BatchNorm:
            return batchnorm_forward(input, layer.gamma, layer.beta, layer.moving_mean,
                                     layer.moving_var, layer.epsilon);
    }
    throw ConfigError("forward_layer: unhandled layer kind");
}

} // namespace ocnna
