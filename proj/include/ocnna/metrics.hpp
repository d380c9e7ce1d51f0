#ifndef OCNNA_METRICS_HPP
#define OCNNA_METRICS_HPP

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "ocnna/dataset.hpp"
#include "ocnna/model.hpp"

namespace ocnna {

struct MetricsReport {
    std::string model_name;
    double base_accuracy = 0.0;   // fraction in [0,1]
    double pruned_accuracy = 0.0; // fraction in [0,1]
    double acc_drop = 0.0;        // percentage points; negative = improvement
    std::uint64_t np_original = 0;
    std::uint64_t np_pruned = 0;
    double rpr = 0.0;             // remaining parameters ratio, (0,1]
};

// Remaining parameters ratio: 1 - (np_o - np_s)/np_o.
double rpr(std::uint64_t np_o, std::uint64_t np_s);

MetricsReport evaluate(const ModelGraph& original, const ModelGraph& pruned,
                       const LabeledDataset& test, int batch_size = 64,
                       unsigned workers = 0);

nlohmann::json to_json(const MetricsReport& r);

// Aligned table with Base/Acc/Acc.Drop/RPR columns, two decimals.
std::string format_table(const MetricsReport& r);

} // namespace ocnna

#endif
