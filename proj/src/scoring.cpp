#include "ocnna/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ocnna/parallel.hpp"

namespace ocnna {

namespace {

// Cyclic Jacobi eigendecomposition of a symmetric n x n matrix. `a` is
// consumed; eigenvectors come back as columns of `v`. The fixed sweep order
// makes the result deterministic.
void jacobi_eigen(std::vector<double>& a, std::size_t n, std::vector<double>& v) {
    v.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
    if (n < 2) return;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
        }
        if (off < 1e-30) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a[i * n + p];
                    const double aiq = a[i * n + q];
                    a[i * n + p] = c * aip - s * aiq;
                    a[i * n + q] = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double api = a[p * n + i];
                    const double aqi = a[q * n + i];
                    a[p * n + i] = c * api - s * aqi;
                    a[q * n + i] = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = v[i * n + p];
                    const double viq = v[i * n + q];
                    v[i * n + p] = c * vip - s * viq;
                    v[i * n + q] = s * vip + c * viq;
                }
            }
        }
    }
}

} // namespace

PCAResult pca_95(MatrixView map) {
    if (map.data == nullptr || map.rows == 0 || map.cols == 0) {
        throw ShapeError("pca_95: empty map");
    }
    const std::size_t H = map.rows, W = map.cols;
    for (std::size_t i = 0; i < H * W; ++i) {
        if (!std::isfinite(map.data[i])) {
            throw NumericError("pca_95: non-finite entry in input map");
        }
    }

    // center columns
    Mat centered(H, W);
    for (std::size_t j = 0; j < W; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < H; ++i) mean += map.at(i, j);
        mean /= static_cast<double>(H);
        for (std::size_t i = 0; i < H; ++i) centered.at(i, j) = map.at(i, j) - mean;
    }

    // column covariance
    const double divisor = H > 1 ? static_cast<double>(H - 1) : 1.0;
    std::vector<double> cov(W * W, 0.0);
    for (std::size_t j = 0; j < W; ++j) {
        for (std::size_t l = j; l < W; ++l) {
            double sum = 0.0;
            for (std::size_t i = 0; i < H; ++i) sum += centered.at(i, j) * centered.at(i, l);
            cov[j * W + l] = cov[l * W + j] = sum / divisor;
        }
    }

    PCAResult result;
    double total = 0.0;
    for (std::size_t j = 0; j < W; ++j) total += cov[j * W + j];
    if (total <= 0.0) {
        return result; // constant map: no variance to explain
    }

    std::vector<double> vecs;
    jacobi_eigen(cov, W, vecs);
    std::vector<std::size_t> order(W);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return cov[a * W + a] > cov[b * W + b];
    });

    result.explained_variance.resize(W);
    for (std::size_t j = 0; j < W; ++j) {
        result.explained_variance[j] = std::max(0.0, cov[order[j] * W + order[j]]);
    }

    double cum = 0.0;
    std::size_t count = 0;
    while (count < W) {
        cum += result.explained_variance[count];
        ++count;
        if (cum >= 0.95 * total) break;
    }
    result.component_count = count;
    result.retained_variance_ratio = std::min(1.0, cum / total);

    result.components = Mat(W, count);
    for (std::size_t j = 0; j < count; ++j) {
        const std::size_t src = order[j];
        std::size_t peak = 0;
        for (std::size_t i = 1; i < W; ++i) {
            if (std::abs(vecs[i * W + src]) > std::abs(vecs[peak * W + src])) peak = i;
        }
        const double sign = vecs[peak * W + src] < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < W; ++i) {
            result.components.at(i, j) = sign * vecs[i * W + src];
        }
    }

    result.scores = Mat(H, count);
    for (std::size_t i = 0; i < H; ++i) {
        for (std::size_t j = 0; j < count; ++j) {
            double dot = 0.0;
            for (std::size_t w = 0; w < W; ++w) {
                dot += centered.at(i, w) * result.components.at(w, j);
            }
            result.scores.at(i, j) = dot;
        }
    }
    return result;
}

double frobenius_norm(MatrixView m) {
    double sum = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double v = m.data[i];
        sum += v * v;
    }
    return std::sqrt(sum);
}

double frobenius_norm(const Mat& m) {
    double sum = 0.0;
    for (double v : m.data) sum += v * v;
    return std::sqrt(sum);
}

double coefficient_of_variation(std::span<const double> xs) {
    if (xs.empty()) throw ConfigError("coefficient_of_variation: empty input");
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (mean == 0.0) return 0.0;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size());
    return std::sqrt(var) / mean;
}

std::vector<ScoreTrace> score_layer_traced(const ActivationCapture& capture, unsigned workers) {
    const std::size_t filters = capture.filter_count();
    const std::size_t images = capture.image_count();
    std::vector<ScoreTrace> traces(filters);

    parallel_for(filters, workers, [&](std::size_t m) {
        try {
            ScoreTrace& trace = traces[m];
            trace.per_image_norms.resize(images);
            for (std::size_t i = 0; i < images; ++i) {
                const MatrixView map{capture.map(m, i).data(), capture.rows(), capture.cols()};
                trace.per_image_norms[i] = frobenius_norm(pca_95(map).scores);
            }
            trace.cv = coefficient_of_variation(trace.per_image_norms);
        } catch (const NumericError& e) {
            throw NumericError("filter " + std::to_string(m) + ": " + e.what());
        }
    });
    return traces;
}

std::vector<double> score_layer(const ActivationCapture& capture, unsigned workers) {
    const std::vector<ScoreTrace> traces = score_layer_traced(capture, workers);
    std::vector<double> scores(traces.size());
    for (std::size_t m = 0; m < traces.size(); ++m) scores[m] = traces[m].cv;
    return scores;
}

std::size_t ImportanceReport::kept_count() const {
    return static_cast<std::size_t>(std::count(keep_mask.begin(), keep_mask.end(), true));
}

std::vector<std::size_t> ImportanceReport::kept_indices() const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < keep_mask.size(); ++i) {
        if (keep_mask[i]) idx.push_back(i);
    }
    return idx;
}

ImportanceReport select_filters(std::span<const double> scores, double k,
                                std::size_t layer_index) {
    if (!(k >= 0.0 && k < 100.0)) {
        throw ConfigError("percentile of significance must lie in [0,100), got " +
                          std::to_string(k));
    }
    if (scores.empty()) throw ConfigError("select_filters: empty score vector");

    const std::size_t m = scores.size();
    const std::size_t keep = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil((100.0 - k) / 100.0 * static_cast<double>(m))));

    // rank by score descending, filter index ascending on ties
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });

    ImportanceReport report;
    report.layer_index = layer_index;
    report.k = k;
    report.scores.assign(scores.begin(), scores.end());
    report.keep_mask.assign(m, false);
    for (std::size_t i = 0; i < keep; ++i) report.keep_mask[order[i]] = true;
    report.threshold = scores[order[keep - 1]];
    return report;
}

nlohmann::json to_json(const ImportanceReport& report) {
    return {{"layer_index", report.layer_index},
            {"scores", report.scores},
            {"keep_mask", report.keep_mask},
            {"threshold", report.threshold},
            {"k", report.k}};
}

ImportanceReport importance_report_from_json(const nlohmann::json& j) {
    ImportanceReport r;
    r.layer_index = j.at("layer_index").get<std::size_t>();
    r.scores = j.at("scores").get<std::vector<double>>();
    r.keep_mask = j.at("keep_mask").get<std::vector<bool>>();
    r.threshold = j.at("threshold").get<double>();
    r.k = j.at("k").get<double>();
    return r;
}

} // namespace ocnna
