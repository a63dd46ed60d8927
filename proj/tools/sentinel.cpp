#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "sentinel/bundle.hpp"
#include "sentinel/dataset.hpp"
#include "sentinel/error.hpp"
#include "sentinel/eval.hpp"
#include "sentinel/json_codec.hpp"
#include "sentinel/pipeline.hpp"
#include "sentinel/service.hpp"
#include "sentinel/synth.hpp"

namespace fs = std::filesystem;
using namespace sentinel;

namespace {

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

SynthConstants constants_from(const std::string& path) {
    return path.empty() ? SynthConstants{} : load_synth_constants(path);
}

Dataset load_all(const std::vector<std::string>& paths) {
    std::vector<Dataset> parts;
    for (const auto& p : paths) {
        Dataset d = load_jsonl(p);
        if (d.provenance.empty()) d.provenance = fs::path(p).stem().string();
        parts.push_back(std::move(d));
    }
    return parts.size() == 1 ? parts.front() : concat(parts);
}

std::map<std::string, Dataset> grid_inputs(const std::string& dir, std::uint64_t seed, const std::string& config) {
    std::map<std::string, Dataset> out;
    if (!dir.empty()) {
        for (const std::string name : {"TrainingSetI", "TrainingSetII", "T1", "T2", "T3", "T4", "T5", "T6", "T7", "T8"}) {
            const fs::path p = fs::path(dir) / (name + ".jsonl");
            if (!fs::exists(p)) throw Error("missing dataset file " + p.string());
            Dataset d = load_jsonl(p);
            d.provenance = name;
            out.emplace(name, std::move(d));
        }
        return out;
    }
    for (auto& [name, d] : generate_series(seed, constants_from(config)).datasets) out.emplace(name, std::move(d));
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pump-sentinel: vibration anomaly classification for centrifugal pumps"};
    app.require_subcommand(1);

    std::uint64_t seed = 1;
    std::string config_path;
    std::string out;

    auto* simulate = app.add_subcommand("simulate", "write the ten synthetic datasets as JSON lines");
    simulate->add_option("--seed", seed, "base seed")->capture_default_str();
    simulate->add_option("--config", config_path, "generator constants (key = value)")->check(CLI::ExistingFile);
    simulate->add_option("--out", out, "output directory")->required();

    std::vector<std::string> data;
    std::string classifier = "ann";
    std::string variant = "vms";
    std::size_t kernels = kDefaultKernelCount;
    std::string ae_data;
    auto* train = app.add_subcommand("train", "train a pipeline and write a model bundle");
    train->add_option("--data", data, "training dataset files")->required()->check(CLI::ExistingFile);
    train->add_option("--classifier", classifier, "ann or rocket")
        ->check(CLI::IsMember({"ann", "rocket"}))
        ->capture_default_str();
    train->add_option("--variant", variant, "m, vm, vms or vmsa")
        ->check(CLI::IsMember({"m", "vm", "vms", "vmsa"}))
        ->capture_default_str();
    train->add_option("--seed", seed, "training seed")->capture_default_str();
    train->add_option("--kernels", kernels, "ROCKET kernel count")->capture_default_str();
    train->add_option("--ae-data", ae_data, "healthy frames for the autoencoder (default: training data)")
        ->check(CLI::ExistingFile);
    train->add_option("--out", out, "bundle path")->required();

    std::string bundle_path;
    bool recalibrate = false;
    auto* eval = app.add_subcommand("eval", "accuracy of a bundle on labeled test sets");
    eval->add_option("--bundle", bundle_path, "model bundle")->required()->check(CLI::ExistingFile);
    eval->add_option("--data", data, "test dataset files, one CSV row each")->required()->check(CLI::ExistingFile);
    eval->add_flag("--recalibrate", recalibrate, "re-estimate the alignment on each test set");
    eval->add_option("--out", out, "CSV output (default: stdout)");

    std::string data_dir;
    auto* grid = app.add_subcommand("grid", "run the Model I/II x ANN/ROCKET x variant x T1-T8 experiment grid");
    grid->add_option("--data-dir", data_dir, "directory written by simulate (default: generate in memory)")
        ->check(CLI::ExistingDirectory);
    grid->add_option("--seed", seed, "generator and training seed")->capture_default_str();
    grid->add_option("--config", config_path, "generator constants")->check(CLI::ExistingFile);
    grid->add_option("--kernels", kernels, "ROCKET kernel count")->capture_default_str();
    grid->add_option("--out", out, "output directory")->required();

    std::uint16_t port = 7878;
    auto* serve = app.add_subcommand("serve", "newline-delimited JSON inference over TCP");
    serve->add_option("--bundle", bundle_path, "model bundle")->required()->check(CLI::ExistingFile);
    serve->add_option("--port", port, "TCP port (0 picks one)")->capture_default_str();

    auto* predict = app.add_subcommand("predict", "per-frame predictions for a dataset file");
    predict->add_option("--bundle", bundle_path, "model bundle")->required()->check(CLI::ExistingFile);
    predict->add_option("--data", data, "dataset file")->required()->check(CLI::ExistingFile);
    predict->add_flag("--recalibrate", recalibrate, "re-estimate the alignment on the dataset");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate) {
            const Series s = generate_series(seed, constants_from(config_path));
            fs::create_directories(out);
            for (const auto& [name, d] : s.datasets) {
                save_jsonl(d, fs::path(out) / (name + ".jsonl"));
                std::cout << name << ": " << d.size() << " frames\n";
            }
        } else if (*train) {
            const Dataset training = load_all(data);
            const auto cfg =
                PipelineConfig::make(parse_classifier(classifier), VariantFlags::parse(variant), seed, kernels);
            std::optional<Dataset> ae;
            if (!ae_data.empty()) ae = load_jsonl(ae_data);
            const TrainedPipeline p = train_pipeline(training, cfg, ae ? &*ae : nullptr);
            if (cfg.classifier == ClassifierKind::rocket && !p.ridge.dropped.empty()) {
                std::cerr << "warning: dropped " << p.ridge.dropped.size() << " constant feature columns\n";
            }
            if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
            save_bundle(p, out);
            std::cout << "wrote " << out << " (" << to_string(cfg.classifier) << ", " << cfg.variant.name() << ")\n";
        } else if (*eval) {
            const TrainedPipeline p = load_bundle(bundle_path);
            std::vector<ExperimentResult> rows;
            for (const auto& path : data) {
                Dataset d = load_jsonl(path);
                if (d.empty()) throw Error("test set " + path + " is empty");
                d.provenance = fs::path(path).stem().string();
                const auto preds =
                    predict_dataset(p, d, recalibrate ? AlignmentSource::recalibrate : AlignmentSource::stored);
                rows.push_back(evaluate_predictions(d, preds, "-", to_string(p.config.classifier),
                                                    p.config.variant.name()));
            }
            if (out.empty()) {
                std::cout << results_csv(rows);
            } else {
                write_results_csv(rows, out);
            }
        } else if (*grid) {
            GridConfig gc;
            gc.seed = seed;
            gc.kernels = kernels;
            gc.progress = [](const std::string& m) { std::cerr << m << '\n'; };
            const GridReport r = run_grid(grid_inputs(data_dir, seed, config_path), gc);
            fs::create_directories(out);
            write_results_csv(r.cells, fs::path(out) / "grid.csv");
            write_results_csv(r.auxiliary, fs::path(out) / "grid_aux.csv");
            write_text(fs::path(out) / "summary.csv", summary_csv(r.comparisons));
            const std::string table = format_grid_table(r) + "\n" + format_comparisons(r.comparisons);
            write_text(fs::path(out) / "table.txt", table);
            for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
            std::cout << table;
        } else if (*serve) {
            InferenceService service(load_bundle(bundle_path));
            TcpServer server(service);
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            server.start(port);
            std::cout << "listening on 127.0.0.1:" << server.port() << std::endl;
            while (!g_stop) {
                std::this_thread::sleep_for(std::chrono::milliseconds(200));
                service.evict_idle();
            }
            server.stop();
        } else if (*predict) {
            const TrainedPipeline p = load_bundle(bundle_path);
            const Dataset d = load_jsonl(data.front());
            const auto preds =
                predict_dataset(p, d, recalibrate ? AlignmentSource::recalibrate : AlignmentSource::stored);
            for (std::size_t i = 0; i < preds.size(); ++i) {
                nlohmann::json row;
                row["pump_id"] = d.frames[i].pump_id;
                row["timestamp"] = d.frames[i].timestamp_ms;
                row["raw"] = preds[i].raw.values();
                row["smoothed"] = preds[i].smoothed.values();
                row["classifier_class"] = preds[i].classifier_class.id();
                row["ae_flag"] = preds[i].ae_flag ? nlohmann::json(to_string(*preds[i].ae_flag)) : nlohmann::json();
                row["final_class"] = preds[i].final_class.id();
                std::cout << row.dump() << '\n';
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
