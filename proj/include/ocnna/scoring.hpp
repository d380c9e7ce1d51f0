#ifndef OCNNA_SCORING_HPP
#define OCNNA_SCORING_HPP

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "ocnna/inference.hpp"
#include "ocnna/tensor.hpp"

namespace ocnna {

// Small dense double matrix, row-major. Used for PCA internals where the
// f32 tensor type would throw away precision.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

struct PCAResult {
    Mat scores;                 // observations projected onto the retained components
    Mat components;             // one orthonormal component per column
    std::vector<double> explained_variance; // all eigenvalues, descending
    double retained_variance_ratio = 0.0;
    std::size_t component_count = 0;
};

// PCA of an HxW map treated as H observations of W variables, retaining the
// smallest set of leading components whose cumulative explained variance
// reaches 95%. A zero-variance map yields zero components and empty scores.
// Component signs are fixed (largest-magnitude coordinate positive) so
// results are reproducible across runs and platforms.
PCAResult pca_95(MatrixView map);

double frobenius_norm(MatrixView m);
double frobenius_norm(const Mat& m);

// Population standard deviation over mean; 0 when the mean is exactly 0
// (the dead-filter convention).
double coefficient_of_variation(std::span<const double> xs);

struct ScoreTrace {
    std::vector<double> per_image_norms;
    double cv = 0.0;
};

// Filter significance scores for one captured conv layer:
// scores[m] = CV over images of ||PCA_95(map of filter m)||_F.
// Filters are scored as independent tasks on up to `workers` threads; the
// result vector is identical for every worker count.
std::vector<double> score_layer(const ActivationCapture& capture, unsigned workers);
std::vector<ScoreTrace> score_layer_traced(const ActivationCapture& capture, unsigned workers);

struct ImportanceReport {
    std::size_t layer_index = 0;
    std::vector<double> scores;     // one CV per filter
    std::vector<bool> keep_mask;
    double threshold = 0.0;         // score of the weakest surviving filter
    double k = 0.0;                 // percentile of significance

    std::size_t kept_count() const;
    std::vector<std::size_t> kept_indices() const;
};

// Keeps the max(1, ceil((100-k)/100 * M)) highest-scoring filters; ties at
// the cut resolve toward the lower filter index.
ImportanceReport select_filters(std::span<const double> scores, double k,
                                std::size_t layer_index = 0);

nlohmann::json to_json(const ImportanceReport& report);
ImportanceReport importance_report_from_json(const nlohmann::json& j);

} // namespace ocnna

#endif
