#ifndef OCNNA_DATASET_HPP
#define OCNNA_DATASET_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "ocnna/tensor.hpp"

namespace ocnna {

struct LabeledDataset {
    Tensor images;                    // [N,H,W,C]
    std::vector<std::uint32_t> labels; // one class index per image
    std::uint32_t class_count = 0;

    std::size_t size() const { return labels.size(); }
    // {H,W,C}
    std::vector<std::size_t> image_shape() const;
    // Copies image i into a [1,H,W,C] tensor.
    Tensor image(std::size_t i) const;
    // Copies the given images, preserving order.
    LabeledDataset subset(const std::vector<std::size_t>& indices) const;

    void validate() const;
};

// Stratified split: the first part receives round(fraction * n_c) samples of
// every class c (at least one), the second part the rest. Deterministic for
// a given seed.
std::pair<LabeledDataset, LabeledDataset> split_dataset(const LabeledDataset& d,
                                                        double fraction,
                                                        std::uint64_t seed);

} // namespace ocnna

#endif
