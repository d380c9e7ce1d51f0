#include <doctest.h>

#include <cmath>
#include <cstring>
#include <set>

#include "ocnna/scoring.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace ocnna;

namespace {

// Eq-style cross-check route: sqrt(trace(A * A^T)) computed directly.
double frobenius_via_trace(MatrixView m) {
    double trace = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i) {
        double diag = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) diag += static_cast<double>(m.at(i, j)) * m.at(i, j);
        trace += diag;
    }
    return std::sqrt(trace);
}

ActivationCapture capture_from_maps(const std::vector<std::vector<std::vector<float>>>& maps,
                                    std::size_t rows, std::size_t cols) {
    ActivationCapture cap(0, maps.size(), maps[0].size(), rows, cols);
    for (std::size_t m = 0; m < maps.size(); ++m) {
        for (std::size_t i = 0; i < maps[m].size(); ++i) {
            std::memcpy(cap.map(m, i).data(), maps[m][i].data(), rows * cols * sizeof(float));
        }
    }
    return cap;
}

} // namespace

TEST_CASE("frobenius norm: hand values") {
    const Tensor a({2, 2}, {3.0f, 4.0f, 0.0f, 0.0f});
    CHECK(frobenius_norm(as_matrix(a)) == doctest::Approx(5.0));

    const Tensor eye({2, 2}, {1.0f, 0.0f, 0.0f, 1.0f});
    CHECK(frobenius_norm(as_matrix(eye)) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("frobenius norm: entrywise and trace formulas agree") {
    Rng rng(201);
    for (int trial = 0; trial < 120; ++trial) {
        const std::size_t r = 1 + rng.bounded(8);
        const std::size_t c = 1 + rng.bounded(8);
        const Tensor m = testutil::random_tensor({r, c}, rng, -5.0f, 5.0f);
        const double direct = frobenius_norm(as_matrix(m));
        const double via_trace = frobenius_via_trace(as_matrix(m));
        CHECK(std::abs(direct - via_trace) <= 1e-6 * std::max(1.0, direct));
    }
}

TEST_CASE("coefficient of variation: hand values") {
    CHECK(coefficient_of_variation(std::vector<double>{7.0, 7.0, 7.0}) == 0.0);
    // mean 3, population std 1
    CHECK(coefficient_of_variation(std::vector<double>{2.0, 4.0}) == doctest::Approx(1.0 / 3.0));
    CHECK(coefficient_of_variation(std::vector<double>{0.0, 0.0, 0.0}) == 0.0);
    CHECK_THROWS_AS(coefficient_of_variation(std::vector<double>{}), ConfigError);
}

TEST_CASE("coefficient of variation matches a brute-force recomputation") {
    Rng rng(202);
    for (int trial = 0; trial < 120; ++trial) {
        const std::size_t n = 1 + rng.bounded(40);
        std::vector<double> xs(n);
        for (double& x : xs) x = 0.1 + 5.0 * rng.uniform();
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double x : xs) var += (x - mean) * (x - mean);
        const double want = std::sqrt(var / static_cast<double>(n)) / mean;
        const double got = coefficient_of_variation(xs);
        CHECK(std::abs(got - want) <= 1e-6 * std::max(1.0, want));
    }
}

TEST_CASE("pca_95: rank-1 maps retain exactly one component at full variance") {
    Rng rng(203);
    std::vector<float> base(6);
    for (float& v : base) v = rng.uniform(-1.0f, 1.0f);
    std::vector<float> data(5 * 6);
    for (std::size_t r = 0; r < 5; ++r) {
        const float scale = 0.5f + static_cast<float>(r);
        for (std::size_t c = 0; c < 6; ++c) data[r * 6 + c] = scale * base[c];
    }
    const Tensor map({5, 6}, std::move(data));
    const PCAResult p = pca_95(as_matrix(map));
    CHECK(p.component_count == 1);
    CHECK(p.retained_variance_ratio == doctest::Approx(1.0));
}

TEST_CASE("pca_95: constant maps are degenerate") {
    const Tensor map({4, 3}, std::vector<float>(12, 2.5f));
    const PCAResult p = pca_95(as_matrix(map));
    CHECK(p.component_count == 0);
    CHECK(p.scores.data.empty());
    CHECK(frobenius_norm(p.scores) == 0.0);
}

TEST_CASE("pca_95 matches the dense covariance eigensolve oracle") {
    Rng rng(204);
    for (int trial = 0; trial < 110; ++trial) {
        const std::size_t h = 2 + rng.bounded(9);
        const std::size_t w = 1 + rng.bounded(7);
        const Tensor map = testutil::random_tensor({h, w}, rng, -2.0f, 2.0f);
        const PCAResult got = pca_95(as_matrix(map));
        const oracle::PcaOracle want = oracle::pca(as_matrix(map));

        REQUIRE(got.explained_variance.size() == want.eigenvalues.size());
        for (std::size_t j = 0; j < want.eigenvalues.size(); ++j) {
            CHECK(std::abs(got.explained_variance[j] - want.eigenvalues[j]) <=
                  1e-6 * std::max(1.0, want.total_variance));
        }
        CHECK(got.component_count == want.retained_count);
        CHECK(std::abs(got.retained_variance_ratio - want.retained_ratio) <= 1e-6);
    }
}

TEST_CASE("pca_95: retained components are orthonormal and explain >= 95%") {
    Rng rng(205);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t h = 3 + rng.bounded(8);
        const std::size_t w = 2 + rng.bounded(6);
        const Tensor map = testutil::random_tensor({h, w}, rng, -3.0f, 3.0f);
        const PCAResult p = pca_95(as_matrix(map));

        CHECK(p.retained_variance_ratio >= 0.95);
        for (std::size_t a = 0; a < p.component_count; ++a) {
            for (std::size_t b = 0; b < p.component_count; ++b) {
                double dot = 0.0;
                for (std::size_t i = 0; i < w; ++i) {
                    dot += p.components.at(i, a) * p.components.at(i, b);
                }
                CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) <= 1e-6);
            }
        }
    }
}

TEST_CASE("pca_95 rejects non-finite maps") {
    const float bad[4] = {1.0f, NAN, 0.0f, 2.0f};
    CHECK_THROWS_AS(pca_95(MatrixView{bad, 2, 2}), NumericError);
}

TEST_CASE("score_layer: a filter constant across images scores zero") {
    std::vector<float> fixed = {1.0f, 2.0f, 3.0f, 4.0f};
    std::vector<float> other1 = {0.0f, 1.0f, 5.0f, 2.0f};
    std::vector<float> other2 = {4.0f, -1.0f, 2.0f, 7.0f};
    const ActivationCapture cap =
        capture_from_maps({{fixed, fixed, fixed}, {other1, other2, other1}}, 2, 2);
    const auto scores = score_layer(cap, 1);
    REQUIRE(scores.size() == 2);
    CHECK(scores[0] == 0.0);
    CHECK(scores[1] > 0.0);
}

TEST_CASE("score_layer equals composing pca, frobenius and cv by hand") {
    Rng rng(206);
    std::vector<std::vector<float>> images;
    for (int i = 0; i < 2; ++i) {
        std::vector<float> m(12);
        for (float& v : m) v = rng.uniform(-1.0f, 1.0f);
        images.push_back(std::move(m));
    }
    const ActivationCapture cap = capture_from_maps({images}, 3, 4);

    std::vector<double> norms;
    for (const auto& img : images) {
        norms.push_back(frobenius_norm(pca_95(MatrixView{img.data(), 3, 4}).scores));
    }
    const double by_hand = coefficient_of_variation(norms);
    const auto scores = score_layer(cap, 1);
    REQUIRE(scores.size() == 1);
    CHECK(scores[0] == by_hand);

    const auto traces = score_layer_traced(cap, 1);
    REQUIRE(traces[0].per_image_norms.size() == 2);
    CHECK(traces[0].per_image_norms[0] == norms[0]);
    CHECK(traces[0].per_image_norms[1] == norms[1]);
}

TEST_CASE("score_layer is bit-identical for any worker count") {
    Rng rng(207);
    std::vector<std::vector<std::vector<float>>> maps(6);
    for (auto& filt : maps) {
        for (int i = 0; i < 5; ++i) {
            std::vector<float> m(25);
            for (float& v : m) v = rng.uniform(-2.0f, 2.0f);
            filt.push_back(std::move(m));
        }
    }
    const ActivationCapture cap = capture_from_maps(maps, 5, 5);
    const auto s1 = score_layer(cap, 1);
    const auto s4 = score_layer(cap, 4);
    const auto s8 = score_layer(cap, 8);
    REQUIRE(s1.size() == 6);
    for (std::size_t m = 0; m < 6; ++m) {
        CHECK(s1[m] == s4[m]);
        CHECK(s1[m] == s8[m]);
    }
}

TEST_CASE("score_layer tags numeric failures with the filter index") {
    std::vector<float> good = {1.0f, 2.0f, 3.0f, 4.0f};
    std::vector<float> bad = {1.0f, NAN, 3.0f, 4.0f};
    const ActivationCapture cap = capture_from_maps({{good, good}, {bad, good}}, 2, 2);
    CHECK_THROWS_WITH_AS(score_layer(cap, 1), doctest::Contains("filter 1"), NumericError);
}

TEST_CASE("select_filters: ceil rule keeps 6 of 10 at k=40") {
    std::vector<double> scores(10);
    for (std::size_t i = 0; i < 10; ++i) scores[i] = static_cast<double>(i);
    const ImportanceReport r = select_filters(scores, 40.0);
    CHECK(r.kept_count() == 6);
    CHECK(r.kept_indices() == std::vector<std::size_t>{4, 5, 6, 7, 8, 9});
    CHECK(r.threshold == 4.0);
}

TEST_CASE("select_filters: k=0 keeps everything") {
    const std::vector<double> scores = {0.5, 0.1, 0.9};
    const ImportanceReport r = select_filters(scores, 0.0);
    CHECK(r.kept_count() == 3);
}

TEST_CASE("select_filters: ties break toward lower filter indices") {
    const std::vector<double> scores = {1.0, 1.0, 1.0, 1.0};
    const ImportanceReport r = select_filters(scores, 50.0);
    CHECK(r.kept_indices() == std::vector<std::size_t>{0, 1});
}

TEST_CASE("select_filters: at least one filter survives any k") {
    const std::vector<double> scores = {0.3, 0.7};
    const ImportanceReport r = select_filters(scores, 99.0);
    CHECK(r.kept_count() == 1);
    CHECK(r.kept_indices() == std::vector<std::size_t>{1});
}

TEST_CASE("select_filters rejects k outside [0,100)") {
    const std::vector<double> scores = {0.5};
    CHECK_THROWS_AS(select_filters(scores, 100.0), ConfigError);
    CHECK_THROWS_AS(select_filters(scores, -1.0), ConfigError);
}

TEST_CASE("kept sets are nested as k grows") {
    Rng rng(208);
    std::vector<double> scores(23);
    for (double& s : scores) s = rng.uniform();
    std::set<std::size_t> previous;
    bool first = true;
    for (double k = 0.0; k < 100.0; k += 7.0) {
        const auto kept = select_filters(scores, k).kept_indices();
        const std::set<std::size_t> cur(kept.begin(), kept.end());
        if (!first) {
            for (std::size_t i : cur) CHECK(previous.count(i) == 1);
        }
        first = false;
        previous = cur;
    }
}

TEST_CASE("keep_mask is invariant under uniform positive scaling of the maps") {
    Rng rng(209);
    std::vector<std::vector<std::vector<float>>> maps(8), scaled(8);
    for (std::size_t m = 0; m < 8; ++m) {
        for (int i = 0; i < 4; ++i) {
            std::vector<float> img(16);
            for (float& v : img) v = rng.uniform(-1.0f, 1.0f);
            std::vector<float> img_scaled(16);
            for (std::size_t p = 0; p < 16; ++p) img_scaled[p] = 3.7f * img[p];
            maps[m].push_back(std::move(img));
            scaled[m].push_back(std::move(img_scaled));
        }
    }
    const auto s_base = score_layer(capture_from_maps(maps, 4, 4), 1);
    const auto s_scaled = score_layer(capture_from_maps(scaled, 4, 4), 1);
    for (double k : {15.0, 40.0, 75.0}) {
        CHECK(select_filters(s_base, k).keep_mask == select_filters(s_scaled, k).keep_mask);
    }
}

TEST_CASE("importance reports round-trip through JSON") {
    const std::vector<double> scores = {0.25, 0.5, 0.125};
    ImportanceReport r = select_filters(scores, 40.0, 3);
    const nlohmann::json j = to_json(r);
    const ImportanceReport back = importance_report_from_json(j);
    CHECK(back.layer_index == r.layer_index);
    CHECK(back.scores == r.scores);
    CHECK(back.keep_mask == r.keep_mask);
    CHECK(back.threshold == r.threshold);
    CHECK(back.k == r.k);
}
