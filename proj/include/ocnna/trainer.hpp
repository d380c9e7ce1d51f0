#ifndef OCNNA_TRAINER_HPP
#define OCNNA_TRAINER_HPP

#include <cstdint>
#include <vector>

#include "ocnna/dataset.hpp"
#include "ocnna/model.hpp"

namespace ocnna {

struct TrainConfig {
    float learning_rate = 1e-3f;
    float momentum = 0.9f;
    float weight_decay = 1e-6f;
    int batch_size = 64;
    int epochs = 1;
    std::uint64_t seed = 0;
};

struct TrainResult {
    ModelGraph model;
    std::vector<double> loss_history; // mean cross-entropy per epoch
};

// SGD with momentum and decoupled weight decay on cross-entropy loss.
// The model must end in a softmax layer; the loss is computed from the
// pre-softmax logits via log-sum-exp. Deterministic for a given seed.
TrainResult train(const ModelGraph& g, const LabeledDataset& d, const TrainConfig& cfg);

// He-uniform kernels, zero biases, identity batchnorm. Deterministic.
void initialize_weights(ModelGraph& g, std::uint64_t seed);

// Class-conditional oriented sinusoidal gratings plus Gaussian noise;
// grayscale [N, size, size, 1] images in [0,1], labels grouped by class.
LabeledDataset make_synthetic_dataset(int classes, int per_class, int size,
                                      std::uint64_t seed);

} // namespace ocnna

#endif
