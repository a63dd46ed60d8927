#include "sentinel/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sentinel/error.hpp"
#include "sentinel/stats.hpp"

namespace sentinel {

double accuracy(std::span<const ClassLabel> predictions, std::span<const ClassLabel> labels) {
    if (predictions.size() != labels.size()) throw Error("accuracy: length mismatch");
    if (predictions.empty()) throw Error("accuracy: no predictions");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i];
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

Confusion confusion_matrix(std::span<const ClassLabel> predictions, std::span<const ClassLabel> labels) {
    if (predictions.size() != labels.size()) throw Error("confusion: length mismatch");
    Confusion m{};
    for (std::size_t i = 0; i < labels.size(); ++i) ++m[labels[i].index()][predictions[i].index()];
    return m;
}

namespace {

bool all_equal(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

}  // namespace

TTestResult paired_ttest(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error("paired t-test: samples differ in length");
    if (a.size() < 2) throw Error("paired t-test: needs at least 2 pairs");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    if (all_equal(d)) throw DegenerateError("paired t-test: differences have zero variance");
    const double n = static_cast<double>(d.size());
    const double sd = std::sqrt(stats::variance_sample(d));
    TTestResult r;
    r.t = stats::mean(d) / (sd / std::sqrt(n));
    r.df = n - 1.0;
    r.p = stats::student_t_two_sided_p(r.t, r.df);
    return r;
}

TTestResult unpaired_ttest(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw Error("unpaired t-test: each sample needs at least 2 values");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double va = stats::variance_sample(a) / na;
    const double vb = stats::variance_sample(b) / nb;
    if (va + vb == 0.0) throw DegenerateError("unpaired t-test: both samples have zero variance");
    TTestResult r;
    r.t = (stats::mean(a) - stats::mean(b)) / std::sqrt(va + vb);
    r.df = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    r.p = stats::student_t_two_sided_p(r.t, r.df);
    return r;
}

ExperimentResult evaluate_predictions(const Dataset& data, std::span<const FramePrediction> predictions,
                                      std::string model, std::string classifier, std::string variant) {
    if (data.size() != predictions.size()) throw Error("evaluate: prediction count does not match the dataset");
    std::vector<ClassLabel> truth, pred;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!data.frames[i].label) throw Error("evaluate: test frame " + std::to_string(i) + " is unlabeled");
        truth.push_back(*data.frames[i].label);
        pred.push_back(predictions[i].final_class);
    }
    ExperimentResult r;
    r.model = std::move(model);
    r.classifier = std::move(classifier);
    r.variant = std::move(variant);
    r.test_set = data.provenance;
    r.accuracy = accuracy(pred, truth);
    r.n_frames = data.size();
    r.confusion = confusion_matrix(pred, truth);
    return r;
}

double Comparison::mean_a() const { return a.empty() ? 0.0 : stats::mean(a); }
double Comparison::mean_b() const { return b.empty() ? 0.0 : stats::mean(b); }
double Comparison::sd_a() const { return a.size() < 2 ? 0.0 : std::sqrt(stats::variance_sample(a)); }
double Comparison::sd_b() const { return b.size() < 2 ? 0.0 : std::sqrt(stats::variance_sample(b)); }

const ExperimentResult& GridReport::cell(const std::string& model, const std::string& classifier,
                                         const std::string& variant, const std::string& test_set) const {
    for (const auto* rows : {&cells, &auxiliary}) {
        for (const ExperimentResult& r : *rows) {
            if (r.model == model && r.classifier == classifier && r.variant == variant && r.test_set == test_set) {
                return r;
            }
        }
    }
    throw Error("grid has no cell " + model + "/" + classifier + "/" + variant + "/" + test_set);
}

namespace {

const std::array<std::string, 2> kModels{"I", "II"};
const std::array<std::string, 2> kClassifiers{"ANN", "ROCKET"};
const std::array<std::string, 4> kVariantOrder{"M", "V+M", "V+M+S", "V+M+S+A"};

int variant_rank(const std::string& v) {
    if (v == "M") return 0;
    if (v == "M+S") return 1;
    if (v == "V+M") return 2;
    if (v == "V+M+S") return 3;
    return 4;
}

void sort_cells(std::vector<ExperimentResult>& rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const ExperimentResult& x, const ExperimentResult& y) {
        return std::make_tuple(x.model.size(), x.classifier, variant_rank(x.variant), x.test_set) <
               std::make_tuple(y.model.size(), y.classifier, variant_rank(y.variant), y.test_set);
    });
}

void run_test(Comparison& c) {
    try {
        c.test = c.paired ? paired_ttest(c.a, c.b) : unpaired_ttest(c.a, c.b);
    } catch (const Error& e) {
        c.note = e.what();
    }
}

const Dataset& require(const std::map<std::string, Dataset>& d, const std::string& name) {
    const auto it = d.find(name);
    if (it == d.end()) throw Error("grid: missing dataset '" + name + "'");
    if (it->second.empty()) throw Error("grid: dataset '" + name + "' is empty");
    return it->second;
}

}  // namespace

GridReport run_grid(const std::map<std::string, Dataset>& datasets, const GridConfig& config) {
    GridReport report;
    auto log = [&](const std::string& m) {
        if (config.progress) config.progress(m);
    };

    Dataset train_one = require(datasets, "TrainingSetI");
    const Dataset& train_two = require(datasets, "TrainingSetII");
    std::map<std::string, Dataset> tests;
    for (const std::string& name : kTestSets) {
        Dataset d = require(datasets, name);
        d.provenance = name;
        tests.emplace(name, std::move(d));
    }

    std::vector<std::string> ae_sets;
    for (const std::string& s : config.autoencoder_test_sets) {
        if (s != "T1") {
            report.warnings.push_back("variant V+M+S+A requested on " + s +
                                      ": the detector is asset-specific and only valid on T1; skipped");
        } else {
            ae_sets.push_back(s);
        }
    }

    std::optional<Detector> detector;
    std::map<std::string, std::vector<AeFlag>> ae_flags;
    if (!ae_sets.empty()) {
        log("training autoencoder on healthy TrainingSetI frames");
        detector = fit_detector(train_one, PipelineConfig::make(ClassifierKind::ann, {}, config.seed).ae);
        TrainedPipeline holder;
        holder.autoencoder = detector->autoencoder;
        holder.threshold = detector->threshold;
        for (const std::string& s : ae_sets) ae_flags[s] = detect_dataset(holder, tests.at(s));
    }

    const Dataset train_both = concat({train_one, train_two});
    for (const std::string& model : kModels) {
        const Dataset& training = model == "I" ? train_one : train_both;
        for (ClassifierKind kind : {ClassifierKind::ann, ClassifierKind::rocket}) {
            const std::string cname = kind == ClassifierKind::ann ? "ANN" : "ROCKET";
            for (bool align : {false, true}) {
                const VariantFlags base{align, false, false};
                log("model " + model + " " + cname + " " + base.name() + ": training on " +
                    std::to_string(training.size()) + " frames");
                const TrainedPipeline pipe =
                    train_pipeline(training, PipelineConfig::make(kind, base, config.seed, config.kernels));
                for (const std::string& name : kTestSets) {
                    const Dataset& test = tests.at(name);
                    const auto raw = classify_dataset(pipe, test, AlignmentSource::recalibrate);
                    for (bool smooth : {false, true}) {
                        const VariantFlags v{align, smooth, false};
                        const auto preds = postprocess_dataset(test, raw, v, nullptr);
                        auto r = evaluate_predictions(test, preds, model, cname, v.name());
                        (align || !smooth ? report.cells : report.auxiliary).push_back(std::move(r));
                    }
                    if (align && ae_flags.count(name)) {
                        const VariantFlags v{true, true, true};
                        const auto preds = postprocess_dataset(test, raw, v, &ae_flags.at(name));
                        report.cells.push_back(evaluate_predictions(test, preds, model, cname, v.name()));
                    }
                }
            }
        }
    }
    sort_cells(report.cells);
    sort_cells(report.auxiliary);

    auto acc = [&](const std::string& m, const std::string& c, const std::string& v, const std::string& t) {
        return report.cell(m, c, v, t).accuracy;
    };

    {
        Comparison c;
        c.name = "smoothing";
        c.description = "pairs (M, M+S) and (V+M, V+M+S) for every model, classifier and test set T1-T8";
        c.label_a = "with smoothing";
        c.label_b = "without smoothing";
        for (const auto& m : kModels)
            for (const auto& k : kClassifiers)
                for (const auto& [plain, smoothed] : {std::pair<std::string, std::string>{"M", "M+S"}, {"V+M", "V+M+S"}})
                    for (const auto& t : kTestSets) {
                        c.a.push_back(acc(m, k, smoothed, t));
                        c.b.push_back(acc(m, k, plain, t));
                    }
        run_test(c);
        report.comparisons.push_back(std::move(c));
    }
    {
        Comparison c;
        c.name = "training_diversity";
        c.description = "Model II vs Model I for every classifier, variant M, V+M, V+M+S and test set T5-T8";
        c.label_a = "Model II";
        c.label_b = "Model I";
        for (const auto& k : kClassifiers)
            for (const std::string v : {"M", "V+M", "V+M+S"})
                for (std::size_t t = 4; t < kTestSets.size(); ++t) {
                    c.a.push_back(acc("II", k, v, kTestSets[t]));
                    c.b.push_back(acc("I", k, v, kTestSets[t]));
                }
        run_test(c);
        report.comparisons.push_back(std::move(c));
    }
    if (!ae_sets.empty()) {
        Comparison c;
        c.name = "voting";
        c.description = "V+M+S+A vs V+M+S for every model and classifier on T1";
        c.label_a = "with voting";
        c.label_b = "without voting";
        for (const auto& m : kModels)
            for (const auto& k : kClassifiers)
                for (const auto& t : ae_sets) {
                    c.a.push_back(acc(m, k, "V+M+S+A", t));
                    c.b.push_back(acc(m, k, "V+M+S", t));
                }
        run_test(c);
        report.comparisons.push_back(std::move(c));
    }
    {
        Comparison c;
        c.name = "alignment";
        c.description = "V+M vs M for every model, classifier and test set T1-T8";
        c.label_a = "V+M";
        c.label_b = "M";
        for (const auto& m : kModels)
            for (const auto& k : kClassifiers)
                for (const auto& t : kTestSets) {
                    c.a.push_back(acc(m, k, "V+M", t));
                    c.b.push_back(acc(m, k, "M", t));
                }
        run_test(c);
        report.comparisons.push_back(std::move(c));
    }
    {
        Comparison c;
        c.name = "ann_vs_rocket";
        c.description = "ANN vs ROCKET for every model, variant M, V+M, V+M+S and test set T1-T8";
        c.label_a = "ANN";
        c.label_b = "ROCKET";
        for (const auto& m : kModels)
            for (const std::string v : {"M", "V+M", "V+M+S"})
                for (const auto& t : kTestSets) {
                    c.a.push_back(acc(m, "ANN", v, t));
                    c.b.push_back(acc(m, "ROCKET", v, t));
                }
        run_test(c);
        report.comparisons.push_back(std::move(c));
    }
    {
        Comparison c;
        c.name = "within_vs_between_pump";
        c.description = "cells on T1-T4 vs cells on T5-T8, every model, classifier and variant M, V+M, V+M+S";
        c.paired = false;
        c.label_a = "within pump";
        c.label_b = "between pumps";
        for (const auto& m : kModels)
            for (const auto& k : kClassifiers)
                for (const std::string v : {"M", "V+M", "V+M+S"})
                    for (std::size_t t = 0; t < kTestSets.size(); ++t) {
                        (t < 4 ? c.a : c.b).push_back(acc(m, k, v, kTestSets[t]));
                    }
        run_test(c);
        report.comparisons.push_back(std::move(c));
    }
    return report;
}

namespace {

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string num(double v) { return fmt("%.17g", v); }

}  // namespace

std::string results_csv(std::span<const ExperimentResult> rows) {
    std::ostringstream os;
    os << "model,classifier,variant,test_set,accuracy,n_frames\n";
    for (const auto& r : rows) {
        os << r.model << ',' << r.classifier << ',' << r.variant << ',' << r.test_set << ',' << num(r.accuracy) << ','
           << r.n_frames << '\n';
    }
    return os.str();
}

void write_results_csv(std::span<const ExperimentResult> rows, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << results_csv(rows);
}

std::string summary_csv(std::span<const Comparison> comparisons) {
    std::ostringstream os;
    os << "comparison,test,group_a,n_a,mean_a,sd_a,group_b,n_b,mean_b,sd_b,t,df,p,cells\n";
    for (const auto& c : comparisons) {
        os << c.name << ',' << (c.paired ? "paired" : "welch") << ',' << c.label_a << ',' << c.a.size() << ','
           << num(c.mean_a()) << ',' << num(c.sd_a()) << ',' << c.label_b << ',' << c.b.size() << ','
           << num(c.mean_b()) << ',' << num(c.sd_b()) << ',';
        if (c.test) {
            os << num(c.test->t) << ',' << num(c.test->df) << ',' << num(c.test->p);
        } else {
            os << ",,";
        }
        os << ",\"" << c.description << "\"\n";
    }
    return os.str();
}

std::string format_grid_table(const GridReport& report) {
    std::ostringstream os;
    std::vector<std::string> headers;
    for (const auto& m : kModels)
        for (const auto& k : kClassifiers)
            for (const auto& v : kVariantOrder) headers.push_back(m + "/" + k + "/" + v);

    std::size_t width = 8;
    for (const auto& h : headers) width = std::max(width, h.size() + 2);
    os << "Test set";
    for (const auto& h : headers) os << std::string(width - h.size(), ' ') << h;
    os << '\n';
    for (const auto& t : kTestSets) {
        os << t << std::string(8 - t.size(), ' ');
        for (const auto& m : kModels)
            for (const auto& k : kClassifiers)
                for (const auto& v : kVariantOrder) {
                    std::string cell = "-";
                    for (const auto& r : report.cells) {
                        if (r.model == m && r.classifier == k && r.variant == v && r.test_set == t) {
                            cell = fmt("%.3f", r.accuracy);
                        }
                    }
                    os << std::string(width - cell.size(), ' ') << cell;
                }
        os << '\n';
    }
    return os.str();
}

std::string format_comparisons(std::span<const Comparison> comparisons) {
    std::ostringstream os;
    for (const auto& c : comparisons) {
        os << c.name << " (" << (c.paired ? "paired" : "Welch") << ", " << c.a.size() << " vs " << c.b.size()
           << "): " << c.label_a << ' ' << fmt("%.3f", c.mean_a()) << " +- " << fmt("%.3f", c.sd_a()) << ", "
           << c.label_b << ' ' << fmt("%.3f", c.mean_b()) << " +- " << fmt("%.3f", c.sd_b());
        if (c.test) {
            os << ", t = " << fmt("%.4f", c.test->t) << ", df = " << fmt("%.2f", c.test->df)
               << ", p = " << fmt("%.4g", c.test->p);
        } else {
            os << ", test undefined: " << c.note;
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace sentinel
