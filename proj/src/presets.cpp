#include "ocnna/presets.hpp"

namespace ocnna {

namespace {

LayerSpec conv_layer(std::size_t kh, std::size_t kw, std::size_t cin, std::size_t cout,
                     Padding padding, const std::string& name) {
    LayerSpec l;
    l.kind = LayerKind::Conv2d;
    l.name = name;
    l.kernel = Tensor({kh, kw, cin, cout});
    l.bias = Tensor({cout});
    l.stride = 1;
    l.padding = padding;
    return l;
}

LayerSpec pool_layer(int window, int stride, const std::string& name) {
    LayerSpec l;
    l.kind = LayerKind::MaxPool;
    l.name = name;
    l.window = window;
    l.stride = stride;
    return l;
}

LayerSpec dense_layer(std::size_t f, std::size_t u, const std::string& name) {
    LayerSpec l;
    l.kind = LayerKind::Dense;
    l.name = name;
    l.kernel = Tensor({f, u});
    l.bias = Tensor({u});
    return l;
}

LayerSpec plain_layer(LayerKind kind, const std::string& name) {
    LayerSpec l;
    l.kind = kind;
    l.name = name;
    return l;
}

} // namespace

ModelGraph build_tiny3(const std::vector<std::size_t>& input_shape, std::size_t class_count) {
    if (input_shape.size() != 3) {
        throw ConfigError("tiny3: input shape must be [H,W,C], got " +
                          shape_to_string(input_shape));
    }
    if (class_count < 2) throw ConfigError("tiny3: class_count must be >= 2");
    std::size_t h = input_shape[0], w = input_shape[1];
    if (h < 8 || w < 8) {
        throw ConfigError("tiny3: input must be at least 8x8, got " +
                          shape_to_string(input_shape));
    }

    constexpr std::size_t kFilters = 16;
    ModelGraph g;
    g.name = "tiny3";
    g.input_shape = input_shape;

    std::size_t cin = input_shape[2];
    for (int block = 0; block < 3; ++block) {
        const std::string suffix = std::to_string(block);
        g.layers.push_back(conv_layer(3, 3, cin, kFilters, Padding::Same, "conv" + suffix));
        g.layers.push_back(plain_layer(LayerKind::Relu, "relu" + suffix));
        g.layers.push_back(pool_layer(2, 2, "pool" + suffix));
        cin = kFilters;
        h /= 2;
        w /= 2;
    }
    g.layers.push_back(plain_layer(LayerKind::Flatten, "flatten"));
    g.layers.push_back(dense_layer(h * w * kFilters, class_count, "head"));
    g.layers.push_back(plain_layer(LayerKind::Softmax, "softmax"));

    infer_shapes(g);
    return g;
}

ModelGraph build_preset(const std::string& name, const std::vector<std::size_t>& input_shape,
                        std::size_t class_count) {
    if (name == "tiny3") return build_tiny3(input_shape, class_count);
    throw ConfigError("unknown preset '" + name + "'; available: tiny3");
}

std::vector<std::string> preset_names() { return {"tiny3"}; }

} // namespace ocnna
