#include "ocnna/metrics.hpp"

#include <cstdio>

#include "ocnna/inference.hpp"

namespace ocnna {

double rpr(std::uint64_t np_o, std::uint64_t np_s) {
    if (np_o == 0) throw ConfigError("rpr: original parameter count must be positive");
    if (np_s > np_o) {
        throw ConfigError("rpr: pruned model has more parameters (" + std::to_string(np_s) +
                          ") than the original (" + std::to_string(np_o) + ")");
    }
    return 1.0 - static_cast<double>(np_o - np_s) / static_cast<double>(np_o);
}

MetricsReport evaluate(const ModelGraph& original, const ModelGraph& pruned,
                       const LabeledDataset& test, int batch_size, unsigned workers) {
    test.validate();

    MetricsReport r;
    r.model_name = original.name;
    r.base_accuracy = accuracy(predict(original, test, batch_size, workers), test.labels);
    r.pruned_accuracy = accuracy(predict(pruned, test, batch_size, workers), test.labels);
    r.acc_drop = (r.base_accuracy - r.pruned_accuracy) * 100.0;
    r.np_original = count_parameters(original);
    r.np_pruned = count_parameters(pruned);
    r.rpr = rpr(r.np_original, r.np_pruned);
    return r;
}

nlohmann::json to_json(const MetricsReport& r) {
    return {{"model", r.model_name},
            {"base_accuracy", r.base_accuracy},
            {"pruned_accuracy", r.pruned_accuracy},
            {"acc_drop_pct", r.acc_drop},
            {"np_original", r.np_original},
            {"np_pruned", r.np_pruned},
            {"rpr", r.rpr}};
}

std::string format_table(const MetricsReport& r) {
    char line[256];
    std::string out;
    std::snprintf(line, sizeof(line), "%-16s %10s %10s %14s %10s\n", "Model", "Base(%)",
                  "Acc(%)", "Acc.Drop(%)", "RPR(%)");
    out += line;
    std::snprintf(line, sizeof(line), "%-16s %10.2f %10.2f %14.2f %10.2f\n",
                  r.model_name.c_str(), r.base_accuracy * 100.0, r.pruned_accuracy * 100.0,
                  r.acc_drop, r.rpr * 100.0);
    out += line;
    return out;
}

} // namespace ocnna
