#include "sentinel/bundle.hpp"

#include <fstream>
#include <sstream>

#include "sentinel/error.hpp"

namespace sentinel {

using nlohmann::json;

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
        throw Error("bundle: " + what + " must have " + std::to_string(rows) + " rows");
    }
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const json& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw Error("bundle: " + what + " row " + std::to_string(r) + " must have " + std::to_string(cols) +
                        " columns");
        }
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

json vector_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from_json(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::identity: return "identity";
    }
    return "?";
}

Activation activation_from(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "tanh") return Activation::tanh;
    if (s == "identity") return Activation::identity;
    throw Error("bundle: unknown activation '" + s + "'");
}

json net_to_json(const DenseNet& net) {
    json layers = json::array();
    for (const DenseLayer& l : net.layers()) {
        layers.push_back({{"activation", activation_name(l.activation)},
                          {"weights", matrix_to_json(l.weights)},
                          {"bias", vector_to_json(l.bias)}});
    }
    return layers;
}

DenseNet net_from_json(const json& j) {
    std::vector<DenseLayer> layers;
    for (const json& l : j) {
        const json& w = l.at("weights");
        const auto rows = static_cast<Eigen::Index>(w.size());
        const auto cols = rows ? static_cast<Eigen::Index>(w[0].size()) : 0;
        DenseLayer layer;
        layer.activation = activation_from(l.at("activation").get<std::string>());
        layer.weights = matrix_from_json(w, rows, cols, "layer weights");
        layer.bias = vector_from_json(l.at("bias"));
        layers.push_back(std::move(layer));
    }
    return DenseNet(std::move(layers));
}

json adam_to_json(const AdamConfig& c) {
    return {{"learning_rate", c.adam.learning_rate},
            {"beta1", c.adam.beta1},
            {"beta2", c.adam.beta2},
            {"epsilon", c.adam.epsilon},
            {"batch_size", c.batch_size},
            {"dropout", c.dropout},
            {"max_epochs", c.max_epochs},
            {"seed", c.seed}};
}

AdamConfig adam_from_json(const json& j) {
    AdamConfig c;
    c.adam.learning_rate = j.at("learning_rate").get<double>();
    c.adam.beta1 = j.at("beta1").get<double>();
    c.adam.beta2 = j.at("beta2").get<double>();
    c.adam.epsilon = j.at("epsilon").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.dropout = j.at("dropout").get<double>();
    c.max_epochs = j.at("max_epochs").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.validate();
    return c;
}

Rotation rotation_from_json(const json& j) {
    const auto v = j.get<std::vector<double>>();
    if (v.size() != 9) throw Error("bundle: rotation needs 9 values");
    std::array<double, 9> a{};
    std::copy(v.begin(), v.end(), a.begin());
    return Rotation::from_row_major(a);
}

}  // namespace

json bundle_to_json(const TrainedPipeline& p) {
    const PipelineConfig& c = p.config;
    json doc;
    doc["version"] = kBundleVersion;
    doc["seed"] = c.seed;
    doc["variant"] = {{"align", c.variant.align}, {"smooth", c.variant.smooth}, {"autoencoder", c.variant.autoencoder}};
    doc["classifier"] = to_string(c.classifier);
    doc["training"] = {{"ann", adam_to_json(c.ann)}, {"ae", adam_to_json(c.ae)}, {"ridge_folds", c.ridge_folds}};

    json rotations = json::object();
    for (const auto& [pump, r] : p.rotations) rotations[pump] = r.row_major();
    doc["rotations"] = rotations;
    doc["default_rotation"] = p.default_rotation.row_major();

    if (c.classifier == ClassifierKind::ann) {
        doc["normalizer"] = p.normalizer.sorted_reference();
        doc["mlp"] = net_to_json(p.mlp.net());
    } else {
        const RidgeClassifier& r = p.ridge;
        doc["rocket"] = {{"kernel_seed", c.kernel_seed()},
                         {"n", c.kernels},
                         {"input_len", kFrameLength},
                         {"ridge",
                          {{"n_features", r.n_features},
                           {"kept", r.kept},
                           {"dropped", r.dropped},
                           {"mean", vector_to_json(r.mean)},
                           {"scale", vector_to_json(r.scale)},
                           {"weights", matrix_to_json(r.weights)},
                           {"intercept", vector_to_json(r.intercept)},
                           {"lambda", r.lambda},
                           {"lambda_grid", r.lambda_grid},
                           {"cv_accuracy", r.cv_accuracy}}}};
    }

    if (p.autoencoder) {
        doc["autoencoder"] = {{"input_mean", p.autoencoder->input_mean()},
                              {"input_std", p.autoencoder->input_std()},
                              {"layers", net_to_json(p.autoencoder->net())},
                              {"threshold",
                               {{"tau", p.threshold.tau},
                                {"error_mean", p.threshold.error_mean},
                                {"error_std", p.threshold.error_std}}}};
    }
    return doc;
}

TrainedPipeline bundle_from_json(const json& doc) {
    if (!doc.is_object()) throw Error("bundle: not a JSON object");
    const auto version = doc.value("version", std::string("<missing>"));
    if (version != kBundleVersion) {
        throw Error("bundle version mismatch: expected " + std::string(kBundleVersion) + ", got " + version);
    }
    try {
        TrainedPipeline p;
        PipelineConfig& c = p.config;
        c.seed = doc.at("seed").get<std::uint64_t>();
        const json& v = doc.at("variant");
        c.variant = {v.at("align").get<bool>(), v.at("smooth").get<bool>(), v.at("autoencoder").get<bool>()};
        c.classifier = parse_classifier(doc.at("classifier").get<std::string>());
        const json& t = doc.at("training");
        c.ann = adam_from_json(t.at("ann"));
        c.ae = adam_from_json(t.at("ae"));
        c.ridge_folds = t.at("ridge_folds").get<std::size_t>();

        for (const auto& [pump, r] : doc.at("rotations").items()) p.rotations.emplace(pump, rotation_from_json(r));
        p.default_rotation = rotation_from_json(doc.at("default_rotation"));

        if (c.classifier == ClassifierKind::ann) {
            p.normalizer = GaussianNormalizer::from_sorted(doc.at("normalizer").get<std::vector<std::vector<double>>>());
            p.mlp = Mlp(net_from_json(doc.at("mlp")));
        } else {
            const json& rk = doc.at("rocket");
            c.kernels = rk.at("n").get<std::size_t>();
            const auto input_len = rk.at("input_len").get<std::size_t>();
            const auto seed = rk.at("kernel_seed").get<std::uint64_t>();
            if (input_len != kFrameLength) throw Error("bundle: kernels must be generated for 512-sample input");
            if (seed != c.kernel_seed()) throw Error("bundle: kernel seed does not match the bundle seed");
            p.kernels = generate_kernels(c.kernels, input_len, seed);

            const json& r = rk.at("ridge");
            RidgeClassifier& m = p.ridge;
            m.n_features = r.at("n_features").get<std::size_t>();
            m.kept = r.at("kept").get<std::vector<std::size_t>>();
            m.dropped = r.at("dropped").get<std::vector<std::size_t>>();
            m.mean = vector_from_json(r.at("mean"));
            m.scale = vector_from_json(r.at("scale"));
            m.weights = matrix_from_json(r.at("weights"), static_cast<Eigen::Index>(m.kept.size()),
                                         static_cast<Eigen::Index>(kNumClasses), "ridge weights");
            m.intercept = vector_from_json(r.at("intercept"));
            m.lambda = r.at("lambda").get<double>();
            m.lambda_grid = r.at("lambda_grid").get<std::vector<double>>();
            m.cv_accuracy = r.at("cv_accuracy").get<std::vector<double>>();
            if (m.n_features != 6 * c.kernels) throw Error("bundle: ridge dimensionality does not match the kernels");
            if (static_cast<std::size_t>(m.mean.size()) != m.kept.size() ||
                static_cast<std::size_t>(m.scale.size()) != m.kept.size() ||
                static_cast<std::size_t>(m.intercept.size()) != kNumClasses) {
                throw Error("bundle: ridge statistics have inconsistent sizes");
            }
        }

        if (doc.contains("autoencoder")) {
            const json& a = doc.at("autoencoder");
            p.autoencoder = Autoencoder(net_from_json(a.at("layers")), a.at("input_mean").get<double>(),
                                        a.at("input_std").get<double>());
            const json& th = a.at("threshold");
            p.threshold = {th.at("tau").get<double>(), th.at("error_mean").get<double>(),
                           th.at("error_std").get<double>()};
        } else if (c.variant.autoencoder) {
            throw Error("bundle: variant A without autoencoder weights");
        }
        return p;
    } catch (const json::exception& e) {
        throw Error(std::string("bundle: malformed document: ") + e.what());
    }
}

std::string serialize_bundle(const TrainedPipeline& p) { return bundle_to_json(p).dump(); }

void save_bundle(const TrainedPipeline& p, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write bundle " + path.string());
    out << serialize_bundle(p) << '\n';
    if (!out) throw Error("failed writing bundle " + path.string());
}

TrainedPipeline load_bundle(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open bundle " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    json doc;
    try {
        doc = json::parse(ss.str());
    } catch (const json::parse_error& e) {
        throw Error("bundle " + path.string() + " is not valid JSON: " + e.what());
    }
    return bundle_from_json(doc);
}

}  // namespace sentinel
