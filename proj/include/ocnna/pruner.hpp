#ifndef OCNNA_PRUNER_HPP
#define OCNNA_PRUNER_HPP

#include <span>
#include <vector>

#include "ocnna/dataset.hpp"
#include "ocnna/model.hpp"
#include "ocnna/scoring.hpp"

namespace ocnna {

struct PruneConfig {
    double k = 40.0;      // percentile of significance, [0,100)
    unsigned workers = 0; // 0 -> logical CPU count
    int batch_size = 32;
};

// Per-layer surgery instructions. Index lists are ascending positions in the
// ORIGINAL tensors; empty lists mean the axis is untouched.
struct LayerEdit {
    std::vector<std::size_t> kept_outputs; // conv filter axis
    std::vector<std::size_t> kept_inputs;  // conv in-channels / dense rows / batchnorm channels
};

struct PrunePlan {
    std::vector<LayerEdit> edits; // one per layer of the source graph
};

// Maps per-conv-layer keep decisions onto every parameterized layer:
// conv kernels lose output filters and the input channels dropped upstream,
// batchnorm follows its conv, flatten expands channels into spatial
// positions, dense layers lose the corresponding input rows. Dense outputs
// are never pruned. Expects one report per conv layer, in layer order.
PrunePlan plan_prune(const ModelGraph& g, std::span<const ImportanceReport> reports);

// Builds the pruned graph; every surviving weight is copied bit-for-bit
// from the source model.
ModelGraph apply_prune(const ModelGraph& g, const PrunePlan& plan);

struct OcnnaResult {
    ModelGraph model;
    std::vector<ImportanceReport> reports; // one per conv layer
};

// The full pipeline on one model: capture each conv layer's activations on
// d_var, score filters, select the k-th percentile, and rebuild.
OcnnaResult ocnna(const ModelGraph& g, const LabeledDataset& d_var, const PruneConfig& cfg);

} // namespace ocnna

#endif
