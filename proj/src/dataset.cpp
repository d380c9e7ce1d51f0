#include "ocnna/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "ocnna/rng.hpp"

namespace ocnna {

std::vector<std::size_t> LabeledDataset::image_shape() const {
    if (images.rank() != 4) {
        throw ShapeError("dataset images must be [N,H,W,C], got " + images.shape_str());
    }
    return {images.dim(1), images.dim(2), images.dim(3)};
}

Tensor LabeledDataset::image(std::size_t i) const {
    const std::size_t px = images.size() / images.dim(0);
    std::vector<float> data(px);
    std::memcpy(data.data(), images.data() + i * px, px * sizeof(float));
    return Tensor({1, images.dim(1), images.dim(2), images.dim(3)}, std::move(data));
}

LabeledDataset LabeledDataset::subset(const std::vector<std::size_t>& indices) const {
    const std::size_t px = images.size() / images.dim(0);
    std::vector<float> data(indices.size() * px);
    std::vector<std::uint32_t> labs(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        std::memcpy(data.data() + i * px, images.data() + indices[i] * px, px * sizeof(float));
        labs[i] = labels[indices[i]];
    }
    LabeledDataset out;
    out.images = Tensor({indices.size(), images.dim(1), images.dim(2), images.dim(3)},
                        std::move(data));
    out.labels = std::move(labs);
    out.class_count = class_count;
    return out;
}

void LabeledDataset::validate() const {
    if (images.rank() != 4) {
        throw ShapeError("dataset images must be [N,H,W,C], got " + images.shape_str());
    }
    if (images.dim(0) != labels.size()) {
        throw ShapeError("dataset has " + std::to_string(images.dim(0)) + " images but " +
                         std::to_string(labels.size()) + " labels");
    }
    if (labels.empty()) throw ConfigError("dataset must contain at least one sample");
    if (class_count == 0) throw ConfigError("dataset class_count must be positive");
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= class_count) {
            throw ConfigError("label " + std::to_string(labels[i]) + " at index " +
                              std::to_string(i) + " is outside class_count " +
                              std::to_string(class_count));
        }
    }
}

std::pair<LabeledDataset, LabeledDataset> split_dataset(const LabeledDataset& d,
                                                        double fraction,
                                                        std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw ConfigError("split fraction must lie in (0,1), got " + std::to_string(fraction));
    }
    d.validate();

    std::vector<std::vector<std::size_t>> by_class(d.class_count);
    for (std::size_t i = 0; i < d.labels.size(); ++i) by_class[d.labels[i]].push_back(i);

    Rng rng(seed);
    std::vector<std::size_t> first, second;
    for (std::uint32_t c = 0; c < d.class_count; ++c) {
        auto& idx = by_class[c];
        if (idx.empty()) continue;
        if (static_cast<double>(idx.size()) * fraction < 1.0) {
            throw ConfigError("class " + std::to_string(c) + " has only " +
                              std::to_string(idx.size()) +
                              " samples; too few for a stratified fraction of " +
                              std::to_string(fraction));
        }
        rng.shuffle(idx);
        const std::size_t take = static_cast<std::size_t>(
            std::llround(fraction * static_cast<double>(idx.size())));
        const std::size_t n = std::max<std::size_t>(1, std::min(take, idx.size() - 1));
        first.insert(first.end(), idx.begin(), idx.begin() + n);
        second.insert(second.end(), idx.begin() + n, idx.end());
    }
    std::sort(first.begin(), first.end());
    std::sort(second.begin(), second.end());
    return {d.subset(first), d.subset(second)};
}

} // namespace ocnna
