#ifndef OCNNA_INFERENCE_HPP
#define OCNNA_INFERENCE_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "ocnna/dataset.hpp"
#include "ocnna/model.hpp"

namespace ocnna {

// Per-filter, per-image output maps of one conv layer, taken after the
// layer's trailing batchnorm/relu (if any) and before any pooling.
class ActivationCapture {
public:
    ActivationCapture(std::size_t layer_index, std::size_t filters, std::size_t images,
                      std::size_t rows, std::size_t cols);

    std::size_t layer_index() const { return layer_index_; }
    std::size_t filter_count() const { return filters_; }
    std::size_t image_count() const { return images_; }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    // The H'xW' map of filter m for image i, row-major.
    std::span<const float> map(std::size_t filter, std::size_t image) const;
    std::span<float> map(std::size_t filter, std::size_t image);

private:
    std::size_t layer_index_, filters_, images_, rows_, cols_;
    std::vector<float> data_; // [filter][image][row][col]
};

// Argmax of the final softmax per image; ties resolve to the lower class
// index. Bit-identical for any batch size or worker count.
std::vector<std::uint32_t> predict(const ModelGraph& g, const LabeledDataset& d,
                                   int batch_size, unsigned workers = 1);

ActivationCapture capture_activations(const ModelGraph& g, const LabeledDataset& d,
                                      std::size_t layer_index, unsigned workers = 1,
                                      int batch_size = 32);

double accuracy(std::span<const std::uint32_t> predictions,
                std::span<const std::uint32_t> labels);

} // namespace ocnna

#endif
