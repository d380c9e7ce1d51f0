#include <doctest.h>

#include <cmath>

#include "ocnna/inference.hpp"
#include "ocnna/presets.hpp"
#include "ocnna/trainer.hpp"
#include "test_support.hpp"

using namespace ocnna;

namespace {

// Two linearly separable blobs on the diagonal, stored as 1x2x1 images.
LabeledDataset make_blobs(std::size_t per_class, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<float> images(per_class * 2 * 2);
    std::vector<std::uint32_t> labels(per_class * 2);
    for (std::size_t i = 0; i < per_class * 2; ++i) {
        const float sign = i < per_class ? -1.0f : 1.0f;
        labels[i] = i < per_class ? 0 : 1;
        images[i * 2 + 0] = sign * 1.0f + rng.uniform(-0.4f, 0.4f);
        images[i * 2 + 1] = sign * 1.0f + rng.uniform(-0.4f, 0.4f);
    }
    LabeledDataset d;
    d.images = Tensor({per_class * 2, 1, 2, 1}, std::move(images));
    d.labels = std::move(labels);
    d.class_count = 2;
    return d;
}

ModelGraph blob_model() {
    ModelGraph g;
    g.name = "blob";
    g.input_shape = {1, 2, 1};
    LayerSpec fl;
    fl.kind = LayerKind::Flatten;
    g.layers.push_back(fl);
    LayerSpec d;
    d.kind = LayerKind::Dense;
    d.name = "head";
    d.kernel = Tensor({2, 2});
    d.bias = Tensor({2});
    g.layers.push_back(std::move(d));
    LayerSpec sm;
    sm.kind = LayerKind::Softmax;
    g.layers.push_back(sm);
    return g;
}

} // namespace

TEST_CASE("zero learning rate and zero decay leave the model bit-identical") {
    ModelGraph g = blob_model();
    initialize_weights(g, 16);
    const LabeledDataset d = make_blobs(10, 401);

    TrainConfig cfg;
    cfg.learning_rate = 0.0f;
    cfg.weight_decay = 0.0f;
    cfg.epochs = 3;
    const TrainResult r = train(g, d, cfg);
    CHECK(testutil::bit_equal(r.model.layers[1].kernel, g.layers[1].kernel));
    CHECK(testutil::bit_equal(r.model.layers[1].bias, g.layers[1].bias));
    CHECK(r.loss_history.size() == 3);
}

TEST_CASE("zero learning rate with weight decay only shrinks parameters") {
    ModelGraph g = blob_model();
    initialize_weights(g, 17);
    const LabeledDataset d = make_blobs(10, 402);

    TrainConfig cfg;
    cfg.learning_rate = 0.0f;
    cfg.weight_decay = 0.01f;
    cfg.epochs = 2;
    cfg.batch_size = 5;
    const TrainResult r = train(g, d, cfg);

    // 2 epochs x 4 batches: every weight is scaled by (1 - wd)^8 exactly
    const int steps = 8;
    const float factor = std::pow(1.0f - cfg.weight_decay, steps);
    for (std::size_t i = 0; i < g.layers[1].kernel.size(); ++i) {
        float expected = g.layers[1].kernel[i];
        for (int s = 0; s < steps; ++s) expected *= (1.0f - cfg.weight_decay);
        CHECK(r.model.layers[1].kernel[i] == doctest::Approx(expected).epsilon(1e-6));
        CHECK(std::abs(r.model.layers[1].kernel[i]) <=
              std::abs(g.layers[1].kernel[i]) * (factor + 1e-3f));
    }
}

TEST_CASE("a dense model separates blobs with margin 1.0 within 50 epochs") {
    ModelGraph g = blob_model();
    initialize_weights(g, 18);
    const LabeledDataset d = make_blobs(50, 403);

    TrainConfig cfg;
    cfg.learning_rate = 0.1f;
    cfg.epochs = 50;
    cfg.batch_size = 10;
    cfg.seed = 5;
    const TrainResult r = train(g, d, cfg);
    const double acc = accuracy(predict(r.model, d, 16), d.labels);
    CHECK(acc >= 0.99);
    CHECK(r.loss_history.size() == 50);
    CHECK(r.loss_history.back() < r.loss_history.front());
}

TEST_CASE("training loss is non-increasing averaged over 5-epoch windows") {
    ModelGraph g = blob_model();
    initialize_weights(g, 19);
    const LabeledDataset d = make_blobs(50, 404);

    TrainConfig cfg;
    cfg.learning_rate = 0.05f;
    cfg.epochs = 30;
    cfg.batch_size = 10;
    const TrainResult r = train(g, d, cfg);

    auto window = [&](std::size_t start) {
        double sum = 0.0;
        for (std::size_t i = start; i < start + 5; ++i) sum += r.loss_history[i];
        return sum / 5.0;
    };
    for (std::size_t start = 0; start + 10 <= r.loss_history.size(); start += 5) {
        CHECK(window(start + 5) <= window(start) + 1e-9);
    }
}

TEST_CASE("training is deterministic given the config") {
    ModelGraph g = build_tiny3({16, 16, 1}, 3);
    initialize_weights(g, 20);
    const LabeledDataset d = make_synthetic_dataset(3, 12, 16, 405);

    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 8;
    cfg.learning_rate = 0.01f;
    cfg.seed = 77;
    const TrainResult a = train(g, d, cfg);
    const TrainResult b = train(g, d, cfg);
    REQUIRE(a.model.layers.size() == b.model.layers.size());
    for (std::size_t i = 0; i < a.model.layers.size(); ++i) {
        CHECK(testutil::bit_equal(a.model.layers[i].kernel, b.model.layers[i].kernel));
        CHECK(testutil::bit_equal(a.model.layers[i].bias, b.model.layers[i].bias));
    }
    CHECK(a.loss_history == b.loss_history);
}

TEST_CASE("non-finite loss aborts with a diagnostic") {
    ModelGraph g = blob_model();
    initialize_weights(g, 21);
    // poison the weights so the first forward overflows to inf
    for (std::size_t i = 0; i < g.layers[1].kernel.size(); ++i) {
        g.layers[1].kernel[i] = 3.0e38f;
    }
    const LabeledDataset d = make_blobs(10, 406);
    TrainConfig cfg;
    cfg.epochs = 1;
    CHECK_THROWS_WITH_AS(train(g, d, cfg), doctest::Contains("diverged"), NumericError);
}

TEST_CASE("train validates its configuration") {
    ModelGraph g = blob_model();
    initialize_weights(g, 22);
    const LabeledDataset d = make_blobs(5, 407);
    TrainConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS_AS(train(g, d, cfg), ConfigError);
    cfg.epochs = 1;
    cfg.momentum = 1.0f;
    CHECK_THROWS_AS(train(g, d, cfg), ConfigError);
    cfg.momentum = 0.9f;
    cfg.batch_size = 0;
    CHECK_THROWS_AS(train(g, d, cfg), ConfigError);
}

TEST_CASE("train requires a softmax head matching the class count") {
    const LabeledDataset d = make_blobs(5, 408);
    ModelGraph no_softmax;
    no_softmax.name = "ns";
    no_softmax.input_shape = {1, 2, 1};
    LayerSpec fl;
    fl.kind = LayerKind::Flatten;
    no_softmax.layers.push_back(fl);
    LayerSpec dl;
    dl.kind = LayerKind::Dense;
    dl.kernel = Tensor({2, 2});
    dl.bias = Tensor({2});
    no_softmax.layers.push_back(std::move(dl));
    TrainConfig cfg;
    CHECK_THROWS_AS(train(no_softmax, d, cfg), ConfigError);
}

TEST_CASE("synthetic dataset: single class labels everything zero") {
    const LabeledDataset d = make_synthetic_dataset(1, 7, 8, 409);
    CHECK(d.size() == 7);
    for (auto l : d.labels) CHECK(l == 0);
    CHECK(d.class_count == 1);
}

TEST_CASE("synthetic dataset is deterministic per seed") {
    const LabeledDataset a = make_synthetic_dataset(3, 6, 8, 410);
    const LabeledDataset b = make_synthetic_dataset(3, 6, 8, 410);
    const LabeledDataset c = make_synthetic_dataset(3, 6, 8, 411);
    CHECK(testutil::bit_equal(a.images, b.images));
    CHECK(a.labels == b.labels);
    CHECK(!testutil::bit_equal(a.images, c.images));
}

TEST_CASE("synthetic dataset rejects empty classes") {
    CHECK_THROWS_AS(make_synthetic_dataset(3, 0, 8, 1), ConfigError);
    CHECK_THROWS_AS(make_synthetic_dataset(0, 5, 8, 1), ConfigError);
}

TEST_CASE("initialize_weights is deterministic and respects fan-in bounds") {
    ModelGraph a = build_tiny3({16, 16, 1}, 3);
    ModelGraph b = build_tiny3({16, 16, 1}, 3);
    initialize_weights(a, 55);
    initialize_weights(b, 55);
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
        CHECK(testutil::bit_equal(a.layers[i].kernel, b.layers[i].kernel));
    }
    // conv0 fan_in = 9 -> |w| <= sqrt(6/9)
    const float limit = std::sqrt(6.0f / 9.0f);
    for (std::size_t i = 0; i < a.layers[0].kernel.size(); ++i) {
        CHECK(std::abs(a.layers[0].kernel[i]) <= limit);
    }
    for (std::size_t i = 0; i < a.layers[0].bias.size(); ++i) {
        CHECK(a.layers[0].bias[i] == 0.0f);
    }
}
