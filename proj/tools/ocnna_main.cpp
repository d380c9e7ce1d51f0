#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ocnna/inference.hpp"
#include "ocnna/metrics.hpp"
#include "ocnna/presets.hpp"
#include "ocnna/pruner.hpp"
#include "ocnna/serialize.hpp"
#include "ocnna/trainer.hpp"

using nlohmann::json;

namespace {

// shortest round-trip decimal form
std::string fmt_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ocnna::IoError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw ocnna::IoError("failed while writing '" + path + "'");
}

std::vector<double> parse_k_grid(const std::string& spec, double step) {
    std::vector<double> ks;
    const auto range_pos = spec.find("..");
    if (range_pos != std::string::npos) {
        const double lo = std::stod(spec.substr(0, range_pos));
        const double hi = std::stod(spec.substr(range_pos + 2));
        if (step <= 0.0) throw ocnna::ConfigError("--k-step must be positive");
        for (double k = lo; k <= hi + 1e-9; k += step) ks.push_back(k);
    } else {
        std::size_t start = 0;
        while (start <= spec.size()) {
            const auto comma = spec.find(',', start);
            const std::string tok =
                spec.substr(start, comma == std::string::npos ? spec.size() : comma - start);
            if (!tok.empty()) ks.push_back(std::stod(tok));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
    }
    if (ks.empty()) throw ocnna::ConfigError("empty k grid '" + spec + "'");
    for (double k : ks) {
        if (!(k >= 0.0 && k < 100.0)) {
            throw ocnna::ConfigError("k value " + fmt_double(k) + " outside [0,100)");
        }
    }
    return ks;
}

json prune_manifest(const ocnna::OcnnaResult& result, const ocnna::ModelGraph& original,
                    double k) {
    json layers = json::array();
    for (const auto& report : result.reports) {
        layers.push_back({{"layer_index", report.layer_index},
                          {"kept", report.kept_indices()},
                          {"scores", report.scores},
                          {"threshold", report.threshold}});
    }
    const std::uint64_t np_o = ocnna::count_parameters(original);
    const std::uint64_t np_s = ocnna::count_parameters(result.model);
    return {{"model", original.name},
            {"k", k},
            {"layers", layers},
            {"np_original", np_o},
            {"np_pruned", np_s},
            {"rpr", ocnna::rpr(np_o, np_s)}};
}

struct CommonArgs {
    unsigned workers = 0;
    int batch_size = 64;
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"OCNNA: structured CNN filter pruning by PCA/Frobenius/CV significance"};
    app.require_subcommand(1);

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "Train a model and write a .ocnn file");
    std::string train_preset, train_model, train_dataset, train_out;
    ocnna::TrainConfig tc;
    tc.epochs = 10;
    train_cmd->add_option("--preset", train_preset, "architecture preset (tiny3)");
    train_cmd->add_option("--model", train_model, "existing .ocnn model to fine-tune");
    train_cmd->add_option("--dataset", train_dataset, "training dataset (.ocnd)")->required();
    train_cmd->add_option("--out", train_out, "output model path (.ocnn)")->required();
    train_cmd->add_option("--epochs", tc.epochs, "training epochs");
    train_cmd->add_option("--lr", tc.learning_rate, "learning rate");
    train_cmd->add_option("--momentum", tc.momentum, "SGD momentum");
    train_cmd->add_option("--weight-decay", tc.weight_decay, "decoupled weight decay");
    train_cmd->add_option("--batch-size", tc.batch_size, "mini-batch size");
    train_cmd->add_option("--seed", tc.seed, "RNG seed (init + shuffling)");

    // ---- score ----
    auto* score_cmd = app.add_subcommand("score", "Write per-layer filter importance JSON");
    std::string score_model, score_dvar, score_out;
    double score_k = 40.0;
    CommonArgs score_common;
    score_cmd->add_option("--model", score_model, "model (.ocnn)")->required();
    score_cmd->add_option("--dvar", score_dvar, "importance dataset (.ocnd)")->required();
    score_cmd->add_option("--k", score_k, "percentile of significance [0,100)");
    score_cmd->add_option("--workers", score_common.workers, "worker threads (0 = CPU count)");
    score_cmd->add_option("--batch-size", score_common.batch_size, "inference batch size");
    score_cmd->add_option("--out", score_out, "output JSON path (default: stdout)");

    // ---- prune ----
    auto* prune_cmd = app.add_subcommand("prune", "Prune a model and write it plus a manifest");
    std::string prune_model, prune_dvar, prune_out, prune_manifest_path;
    double prune_k = 40.0;
    CommonArgs prune_common;
    prune_cmd->add_option("--model", prune_model, "model (.ocnn)")->required();
    prune_cmd->add_option("--dvar", prune_dvar, "importance dataset (.ocnd)")->required();
    prune_cmd->add_option("--k", prune_k, "percentile of significance [0,100)");
    prune_cmd->add_option("--out", prune_out, "pruned model path (.ocnn)")->required();
    prune_cmd->add_option("--manifest", prune_manifest_path,
                          "prune manifest JSON path (default: <out>.json)");
    prune_cmd->add_option("--workers", prune_common.workers, "worker threads (0 = CPU count)");
    prune_cmd->add_option("--batch-size", prune_common.batch_size, "inference batch size");

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "Compare original and pruned models on a test set");
    std::string eval_original, eval_pruned, eval_test, eval_json;
    CommonArgs eval_common;
    eval_cmd->add_option("--original", eval_original, "original model (.ocnn)")->required();
    eval_cmd->add_option("--pruned", eval_pruned, "pruned model (.ocnn)")->required();
    eval_cmd->add_option("--test", eval_test, "test dataset (.ocnd)")->required();
    eval_cmd->add_option("--json", eval_json, "also write the report as JSON");
    eval_cmd->add_option("--workers", eval_common.workers, "worker threads (0 = CPU count)");
    eval_cmd->add_option("--batch-size", eval_common.batch_size, "inference batch size");

    // ---- sweep ----
    auto* sweep_cmd = app.add_subcommand("sweep", "Prune at several k values and emit CSV");
    std::string sweep_model, sweep_dvar, sweep_test, sweep_out, sweep_grid = "10..70";
    double sweep_step = 5.0;
    CommonArgs sweep_common;
    sweep_cmd->add_option("--model", sweep_model, "model (.ocnn)")->required();
    sweep_cmd->add_option("--dvar", sweep_dvar, "importance dataset (.ocnd)")->required();
    sweep_cmd->add_option("--test", sweep_test, "test dataset (.ocnd)")->required();
    sweep_cmd->add_option("--k-grid", sweep_grid, "range 'lo..hi' or comma list (default 10..70)");
    sweep_cmd->add_option("--k-step", sweep_step, "step for range grids (default 5)");
    sweep_cmd->add_option("--out", sweep_out, "output CSV path (default: stdout)");
    sweep_cmd->add_option("--workers", sweep_common.workers, "worker threads (0 = CPU count)");
    sweep_cmd->add_option("--batch-size", sweep_common.batch_size, "inference batch size");

    // ---- info ----
    auto* info_cmd = app.add_subcommand("info", "Print the layer table of a model");
    std::string info_model;
    info_cmd->add_option("--model", info_model, "model (.ocnn)")->required();

    // ---- synth ----
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic labeled dataset");
    int synth_classes = 3, synth_per_class = 667, synth_size = 16;
    std::uint64_t synth_seed = 0;
    std::string synth_out;
    synth_cmd->add_option("--classes", synth_classes, "number of classes");
    synth_cmd->add_option("--per-class", synth_per_class, "samples per class");
    synth_cmd->add_option("--size", synth_size, "image side length");
    synth_cmd->add_option("--seed", synth_seed, "RNG seed");
    synth_cmd->add_option("--out", synth_out, "output dataset path (.ocnd)")->required();

    // ---- split ----
    auto* split_cmd = app.add_subcommand("split", "Stratified split of a dataset");
    std::string split_dataset_path, split_first, split_second;
    double split_fraction = 0.10;
    std::uint64_t split_seed = 0;
    split_cmd->add_option("--dataset", split_dataset_path, "input dataset (.ocnd)")->required();
    split_cmd->add_option("--fraction", split_fraction, "fraction for the first part (0,1)");
    split_cmd->add_option("--seed", split_seed, "RNG seed");
    split_cmd->add_option("--out-first", split_first, "output for the fraction part")->required();
    split_cmd->add_option("--out-second", split_second, "output for the remainder")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*train_cmd) {
            if (train_preset.empty() == train_model.empty()) {
                throw ocnna::ConfigError("train: give exactly one of --preset or --model");
            }
            const ocnna::LabeledDataset data = ocnna::load_dataset(train_dataset);
            ocnna::ModelGraph model;
            if (!train_preset.empty()) {
                model = ocnna::build_preset(train_preset, data.image_shape(), data.class_count);
                ocnna::initialize_weights(model, tc.seed);
            } else {
                model = ocnna::load_model(train_model);
            }
            ocnna::TrainResult result = ocnna::train(model, data, tc);
            ocnna::save_model(result.model, train_out);
            const auto preds = ocnna::predict(result.model, data, tc.batch_size);
            std::printf("trained %s for %d epochs: loss %.4f -> %.4f, train accuracy %.4f\n",
                        result.model.name.c_str(), tc.epochs, result.loss_history.front(),
                        result.loss_history.back(),
                        ocnna::accuracy(preds, data.labels));
            std::printf("wrote %s\n", train_out.c_str());
        } else if (*score_cmd) {
            const ocnna::ModelGraph model = ocnna::load_model(score_model);
            const ocnna::LabeledDataset dvar = ocnna::load_dataset(score_dvar);
            if (!(score_k >= 0.0 && score_k < 100.0)) {
                throw ocnna::ConfigError("--k must lie in [0,100), got " + fmt_double(score_k));
            }
            json reports = json::array();
            for (std::size_t li : model.conv_layer_indices()) {
                const auto cap = ocnna::capture_activations(model, dvar, li,
                                                            score_common.workers,
                                                            score_common.batch_size);
                const auto scores = ocnna::score_layer(cap, score_common.workers);
                reports.push_back(ocnna::to_json(ocnna::select_filters(scores, score_k, li)));
            }
            const json doc = {{"model", model.name}, {"k", score_k}, {"reports", reports}};
            const std::string text = doc.dump(2) + "\n";
            if (score_out.empty()) {
                std::fputs(text.c_str(), stdout);
            } else {
                write_text_file(score_out, text);
            }
        } else if (*prune_cmd) {
            const ocnna::ModelGraph model = ocnna::load_model(prune_model);
            const ocnna::LabeledDataset dvar = ocnna::load_dataset(prune_dvar);
            ocnna::PruneConfig cfg;
            cfg.k = prune_k;
            cfg.workers = prune_common.workers;
            cfg.batch_size = prune_common.batch_size;
            const ocnna::OcnnaResult result = ocnna::ocnna(model, dvar, cfg);
            ocnna::save_model(result.model, prune_out);
            const json manifest = prune_manifest(result, model, prune_k);
            const std::string manifest_path =
                prune_manifest_path.empty() ? prune_out + ".json" : prune_manifest_path;
            write_text_file(manifest_path, manifest.dump(2) + "\n");
            std::printf("pruned %s at k=%s: %llu -> %llu parameters (RPR %.4f)\n",
                        model.name.c_str(), fmt_double(prune_k).c_str(),
                        static_cast<unsigned long long>(manifest["np_original"].get<std::uint64_t>()),
                        static_cast<unsigned long long>(manifest["np_pruned"].get<std::uint64_t>()),
                        manifest["rpr"].get<double>());
            std::printf("wrote %s and %s\n", prune_out.c_str(), manifest_path.c_str());
        } else if (*eval_cmd) {
            const ocnna::ModelGraph original = ocnna::load_model(eval_original);
            const ocnna::ModelGraph pruned = ocnna::load_model(eval_pruned);
            const ocnna::LabeledDataset test = ocnna::load_dataset(eval_test);
            const ocnna::MetricsReport report =
                ocnna::evaluate(original, pruned, test, eval_common.batch_size,
                                eval_common.workers);
            std::fputs(ocnna::format_table(report).c_str(), stdout);
            if (!eval_json.empty()) {
                write_text_file(eval_json, ocnna::to_json(report).dump(2) + "\n");
            }
        } else if (*sweep_cmd) {
            const ocnna::ModelGraph model = ocnna::load_model(sweep_model);
            const ocnna::LabeledDataset dvar = ocnna::load_dataset(sweep_dvar);
            const ocnna::LabeledDataset test = ocnna::load_dataset(sweep_test);
            const std::vector<double> ks = parse_k_grid(sweep_grid, sweep_step);

            std::string csv = "k,accuracy,params,rpr\n";
            const std::uint64_t np_o = ocnna::count_parameters(model);
            for (double k : ks) {
                ocnna::PruneConfig cfg;
                cfg.k = k;
                cfg.workers = sweep_common.workers;
                cfg.batch_size = sweep_common.batch_size;
                const ocnna::OcnnaResult result = ocnna::ocnna(model, dvar, cfg);
                const auto preds = ocnna::predict(result.model, test, sweep_common.batch_size,
                                                  sweep_common.workers);
                const double acc = ocnna::accuracy(preds, test.labels);
                const std::uint64_t np_s = ocnna::count_parameters(result.model);
                csv += fmt_double(k) + "," + fmt_double(acc) + "," + std::to_string(np_s) +
                       "," + fmt_double(ocnna::rpr(np_o, np_s)) + "\n";
            }
            if (sweep_out.empty()) {
                std::fputs(csv.c_str(), stdout);
            } else {
                write_text_file(sweep_out, csv);
            }
        } else if (*info_cmd) {
            const ocnna::ModelGraph model = ocnna::load_model(info_model);
            const auto shapes = ocnna::infer_shapes(model);
            std::printf("model: %s   input: %s\n", model.name.c_str(),
                        ocnna::shape_to_string(model.input_shape).c_str());
            std::printf("%-4s %-12s %-10s %-16s %12s %8s\n", "idx", "name", "kind", "output",
                        "params", "filters");
            for (std::size_t i = 0; i < model.layers.size(); ++i) {
                const ocnna::LayerSpec& l = model.layers[i];
                const std::string filters =
                    l.is_conv() ? std::to_string(l.filter_count()) : "-";
                std::printf("%-4zu %-12s %-10s %-16s %12zu %8s\n", i, l.name.c_str(),
                            ocnna::layer_kind_name(l.kind),
                            ocnna::shape_to_string(shapes[i]).c_str(), l.parameter_count(),
                            filters.c_str());
            }
            std::printf("total parameters: %llu\n",
                        static_cast<unsigned long long>(ocnna::count_parameters(model)));
        } else if (*synth_cmd) {
            const ocnna::LabeledDataset d = ocnna::make_synthetic_dataset(
                synth_classes, synth_per_class, synth_size, synth_seed);
            ocnna::save_dataset(d, synth_out);
            std::printf("wrote %s: %zu images of %dx%dx1, %d classes\n", synth_out.c_str(),
                        d.size(), synth_size, synth_size, synth_classes);
        } else if (*split_cmd) {
            const ocnna::LabeledDataset d = ocnna::load_dataset(split_dataset_path);
            const auto [first, second] = ocnna::split_dataset(d, split_fraction, split_seed);
            ocnna::save_dataset(first, split_first);
            ocnna::save_dataset(second, split_second);
            std::printf("split %zu samples into %zu + %zu\n", d.size(), first.size(),
                        second.size());
        }
    } catch (const ocnna::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const ocnna::NumericError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const ocnna::Error& e) {
        // IO, format and shape problems
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
