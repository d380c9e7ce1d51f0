#ifndef OCNNA_MODEL_HPP
#define OCNNA_MODEL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ocnna/ops.hpp"
#include "ocnna/tensor.hpp"

namespace ocnna {

enum class LayerKind { Conv2d, MaxPool, Dense, Flatten, Relu, Softmax, BatchNorm };

const char* layer_kind_name(LayerKind kind);
LayerKind layer_kind_from_name(const std::string& name);

// One layer of a chain-topology model. Which fields are meaningful depends
// on `kind`; unused tensors stay empty.
struct LayerSpec {
    LayerKind kind = LayerKind::Relu;
    std::string name;

    Tensor kernel;       // conv2d: [kh,kw,Cin,Cout]; dense: [F,U]
    Tensor bias;         // conv2d: [Cout]; dense: [U]
    Tensor gamma, beta, moving_mean, moving_var; // batchnorm: [C] each

    int stride = 1;      // conv2d, maxpool
    int window = 0;      // maxpool
    Padding padding = Padding::Valid; // conv2d
    float epsilon = 1e-5f;            // batchnorm

    bool is_conv() const { return kind == LayerKind::Conv2d; }
    // Conv output filter count M^l.
    std::size_t filter_count() const;
    std::size_t parameter_count() const;
};

// A single chain of layers plus the per-sample input shape {H,W,C}.
struct ModelGraph {
    std::string name;
    std::vector<std::size_t> input_shape;
    std::vector<LayerSpec> layers;

    std::vector<std::size_t> conv_layer_indices() const;
};

// Per-layer output shapes (per sample, batch axis excluded), starting from
// g.input_shape. Throws ShapeError naming the incompatible layers.
std::vector<std::vector<std::size_t>> infer_shapes(const ModelGraph& g);

// Sum of trainable element counts: kernels, biases, batchnorm gamma/beta.
std::uint64_t count_parameters(const ModelGraph& g);

// Forward one layer on a batched input [N, ...]. Shared by inference,
// capture and the trainer.
Tensor forward_layer(const LayerSpec& layer, const Tensor& input);

} // namespace ocnna

#endif
