#include "ocnna/pruner.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace ocnna {

namespace {

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

void check_index_list(const std::vector<std::size_t>& idx, std::size_t limit,
                      const std::string& what) {
    if (idx.empty()) throw ConfigError(what + ": kept index list is empty");
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= limit) {
            throw ConfigError(what + ": index " + std::to_string(idx[i]) +
                              " out of range (limit " + std::to_string(limit) + ")");
        }
        if (i > 0 && idx[i] <= idx[i - 1]) {
            throw ConfigError(what + ": kept indices must be strictly ascending");
        }
    }
}

Tensor slice_channels(const Tensor& t, const std::vector<std::size_t>& kept) {
    // rank-1 per-channel parameter
    std::vector<float> data(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) data[i] = t[kept[i]];
    return Tensor({kept.size()}, std::move(data));
}

} // namespace

PrunePlan plan_prune(const ModelGraph& g, std::span<const ImportanceReport> reports) {
    const std::vector<std::size_t> conv_indices = g.conv_layer_indices();
    if (reports.size() != conv_indices.size()) {
        throw ConfigError("plan_prune: " + std::to_string(reports.size()) +
                          " reports for " + std::to_string(conv_indices.size()) +
                          " conv layers");
    }
    const std::vector<std::vector<std::size_t>> shapes = infer_shapes(g);

    PrunePlan plan;
    plan.edits.resize(g.layers.size());

    // indices of surviving channels in the current layer's input, relative
    // to the original model
    std::vector<std::size_t> kept = all_indices(g.input_shape[2]);
    std::size_t next_report = 0;

    for (std::size_t i = 0; i < g.layers.size(); ++i) {
        const LayerSpec& l = g.layers[i];
        LayerEdit& edit = plan.edits[i];
        switch (l.kind) {
            case LayerKind::Conv2d: {
                const ImportanceReport& report = reports[next_report++];
                if (report.keep_mask.size() != l.filter_count()) {
                    throw ConfigError("plan_prune: report for layer " + std::to_string(i) +
                                      " covers " + std::to_string(report.keep_mask.size()) +
                                      " filters but the layer has " +
                                      std::to_string(l.filter_count()));
                }
                edit.kept_inputs = kept;
                edit.kept_outputs = report.kept_indices();
                check_index_list(edit.kept_outputs, l.filter_count(),
                                 "plan_prune: layer " + std::to_string(i));
                kept = edit.kept_outputs;
                break;
            }
            case LayerKind::BatchNorm: {
                edit.kept_inputs = kept;
                break;
            }
            case LayerKind::Flatten: {
                const std::vector<std::size_t>& in_shape =
                    i == 0 ? g.input_shape : shapes[i - 1];
                if (in_shape.size() == 3) {
                    // NHWC flattening: channel c at (h,w) lands at h*W*C + w*C + c
                    const std::size_t W = in_shape[1], C = in_shape[2];
                    std::vector<std::size_t> flat;
                    flat.reserve(in_shape[0] * W * kept.size());
                    for (std::size_t h = 0; h < in_shape[0]; ++h) {
                        for (std::size_t w = 0; w < W; ++w) {
                            for (std::size_t c : kept) flat.push_back((h * W + w) * C + c);
                        }
                    }
                    kept = std::move(flat);
                }
                break;
            }
            case LayerKind::Dense: {
                edit.kept_inputs = kept;
                // dense outputs are never pruned
                kept = all_indices(l.kernel.dim(1));
                break;
            }
            case LayerKind::MaxPool:
            case LayerKind::Relu:
            case LayerKind::Softmax:
                break;
        }
    }
    return plan;
}

ModelGraph apply_prune(const ModelGraph& g, const PrunePlan& plan) {
    if (plan.edits.size() != g.layers.size()) {
        throw ConfigError("apply_prune: plan covers " + std::to_string(plan.edits.size()) +
                          " layers but the model has " + std::to_string(g.layers.size()));
    }

    ModelGraph out;
    out.name = g.name;
    out.input_shape = g.input_shape;
    out.layers.reserve(g.layers.size());

    for (std::size_t i = 0; i < g.layers.size(); ++i) {
        const LayerSpec& l = g.layers[i];
        const LayerEdit& edit = plan.edits[i];
        const std::string where = "apply_prune: layer " + std::to_string(i);
        LayerSpec nl = l; // copies hyperparameters and small tensors

        switch (l.kind) {
            case LayerKind::Conv2d: {
                const std::size_t kh = l.kernel.dim(0), kw = l.kernel.dim(1);
                const std::size_t Cin = l.kernel.dim(2), Cout = l.kernel.dim(3);
                check_index_list(edit.kept_inputs, Cin, where);
                check_index_list(edit.kept_outputs, Cout, where);

                Tensor kernel({kh, kw, edit.kept_inputs.size(), edit.kept_outputs.size()});
                for (std::size_t r = 0; r < kh; ++r) {
                    for (std::size_t s = 0; s < kw; ++s) {
                        for (std::size_t ci = 0; ci < edit.kept_inputs.size(); ++ci) {
                            const float* src = l.kernel.data() +
                                ((r * kw + s) * Cin + edit.kept_inputs[ci]) * Cout;
                            float* dst = kernel.data() +
                                ((r * kw + s) * edit.kept_inputs.size() + ci) *
                                    edit.kept_outputs.size();
                            for (std::size_t co = 0; co < edit.kept_outputs.size(); ++co) {
                                dst[co] = src[edit.kept_outputs[co]];
                            }
                        }
                    }
                }
                nl.kernel = std::move(kernel);
                nl.bias = slice_channels(l.bias, edit.kept_outputs);
                break;
            }
            case LayerKind::BatchNorm: {
                check_index_list(edit.kept_inputs, l.gamma.dim(0), where);
                nl.gamma = slice_channels(l.gamma, edit.kept_inputs);
                nl.beta = slice_channels(l.beta, edit.kept_inputs);
                nl.moving_mean = slice_channels(l.moving_mean, edit.kept_inputs);
                nl.moving_var = slice_channels(l.moving_var, edit.kept_inputs);
                break;
            }
            case LayerKind::Dense: {
                const std::size_t F = l.kernel.dim(0), U = l.kernel.dim(1);
                check_index_list(edit.kept_inputs, F, where);
                Tensor kernel({edit.kept_inputs.size(), U});
                for (std::size_t f = 0; f < edit.kept_inputs.size(); ++f) {
                    const float* src = l.kernel.data() + edit.kept_inputs[f] * U;
                    std::copy(src, src + U, kernel.data() + f * U);
                }
                nl.kernel = std::move(kernel);
                break;
            }
            case LayerKind::MaxPool:
            case LayerKind::Flatten:
            case LayerKind::Relu:
            case LayerKind::Softmax:
                break;
        }
        out.layers.push_back(std::move(nl));
    }

    infer_shapes(out); // the rebuilt chain must be consistent
    return out;
}

OcnnaResult ocnna(const ModelGraph& g, const LabeledDataset& d_var, const PruneConfig& cfg) {
    if (!(cfg.k >= 0.0 && cfg.k < 100.0)) {
        throw ConfigError("percentile of significance must lie in [0,100), got " +
                          std::to_string(cfg.k));
    }

    OcnnaResult result;
    for (std::size_t li : g.conv_layer_indices()) {
        // one layer's maps resident at a time
        const ActivationCapture cap =
            capture_activations(g, d_var, li, cfg.workers, cfg.batch_size);
        const std::vector<double> scores = score_layer(cap, cfg.workers);
        result.reports.push_back(select_filters(scores, cfg.k, li));
    }
    const PrunePlan plan = plan_prune(g, result.reports);
    result.model = apply_prune(g, plan);
    return result;
}

} // namespace ocnna
