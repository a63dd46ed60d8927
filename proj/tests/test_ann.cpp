#include <doctest.h>

#include "sentinel/ann.hpp"
#include "sentinel/error.hpp"
#include "support.hpp"

using namespace sentinel;

namespace {

std::vector<FeatureVector> random_features(std::mt19937_64& g, std::size_t n) {
    std::vector<FeatureVector> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (double& c : out[i].coeffs) c = testutil::uniform(g, -1.0, 1.0);
        out[i].label = ClassLabel(1 + static_cast<int>(i % 6));
    }
    return out;
}

// Two 20-d Gaussian blobs 12 sigma apart.
std::vector<FeatureVector> blobs(std::mt19937_64& g) {
    std::normal_distribution<double> n(0.0, 0.05);
    std::vector<FeatureVector> out;
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < 100; ++i) {
            FeatureVector v;
            for (double& x : v.coeffs) x = (c == 0 ? -0.3 : 0.3) + n(g);
            v.label = ClassLabel(c + 1);
            out.push_back(v);
        }
    return out;
}

}  // namespace

TEST_SUITE("ann") {

TEST_CASE("layer sizes") {
    const Mlp m = Mlp::initialize(1);
    const auto& l = m.net().layers();
    REQUIRE(l.size() == 3);
    CHECK(l[0].weights.rows() == 64);
    CHECK(l[0].weights.cols() == 20);
    CHECK(l[1].weights.rows() == 64);
    CHECK(l[2].weights.rows() == 6);
    CHECK(l[0].activation == Activation::relu);
    CHECK(l[2].activation == Activation::identity);
}

TEST_CASE("config validation") {
    AdamConfig c;
    CHECK_NOTHROW(c.validate());
    c.dropout = 1.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = AdamConfig{};
    c.adam.learning_rate = 0.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = AdamConfig{};
    c.batch_size = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    const AdamConfig ae = AdamConfig::autoencoder(3);
    CHECK(ae.dropout == 0.0);
    CHECK(ae.max_epochs == 100);
    CHECK(ae.batch_size == 16);
    CHECK(ae.adam.learning_rate == 0.001);
}

TEST_CASE("probabilities always sum to one") {
    auto g = testutil::rng(1);
    const Mlp m = Mlp::initialize(2);
    for (const auto& v : random_features(g, 50)) {
        const auto p = m.predict_proba(v);
        double s = 0.0;
        for (double x : p.values()) s += x;
        CHECK(std::abs(s - 1.0) <= 1e-9);
    }
}

TEST_CASE("zero network is uniform; output bias shifts cancel") {
    auto g = testutil::rng(2);
    Mlp m = Mlp::initialize(3);
    Mlp zero = m;
    for (auto& l : zero.net().layers()) {
        l.weights.setZero();
        l.bias.setZero();
    }
    const auto v = random_features(g, 1).front();
    for (double x : zero.predict_proba(v).values()) CHECK(x == doctest::Approx(1.0 / 6.0).epsilon(1e-12));

    Mlp shifted = m;
    shifted.net().layers().back().bias.array() += 7.5;
    for (std::size_t k = 0; k < 6; ++k)
        CHECK(std::abs(shifted.predict_proba(v)[k] - m.predict_proba(v)[k]) <= 1e-12);
}

TEST_CASE("frame probabilities are the window mean") {
    auto g = testutil::rng(3);
    const Mlp m = Mlp::initialize(4);
    const auto f = random_features(g, 2);
    const auto p = m.predict_proba(f[0]), q = m.predict_proba(f[1]);
    CHECK(frame_proba(m, std::span(f.data(), 1)) == p);
    const auto pq = frame_proba(m, f);
    for (std::size_t k = 0; k < 6; ++k) CHECK(pq[k] == doctest::Approx((p[k] + q[k]) / 2).epsilon(1e-12));
}

TEST_CASE("property: the mean of distributions is a distribution") {
    auto g = testutil::rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<ClassProbabilities> ps;
        const int n = std::uniform_int_distribution<int>(1, 20)(g);
        for (int i = 0; i < n; ++i) {
            std::array<double, 6> v{};
            for (double& x : v) x = testutil::uniform(g, 0.0, 1.0) * (testutil::uniform(g, 0, 1) < 0.3 ? 0.0 : 1.0);
            v[static_cast<std::size_t>(i) % 6] += 1e-3;
            ps.push_back(ClassProbabilities::normalized(v));
        }
        const auto m = mean_probabilities(ps);
        double s = 0.0;
        for (double x : m.values()) {
            CHECK(x >= 0.0);
            s += x;
        }
        CHECK(std::abs(s - 1.0) <= 1e-9);
    }
}

TEST_CASE("property: relu-path gradients match central differences") {
    for (std::uint64_t trial = 0; trial < 10; ++trial) {
        auto g = testutil::rng(10 + trial);
        const Mlp m = Mlp::initialize(trial);
        const auto batch = random_features(g, 8);
        CHECK(gradient_check(m, batch) <= 1e-4);
    }
}

TEST_CASE("perfectly fit sample has a vanishing gradient") {
    Mlp m = Mlp::initialize(5);
    for (auto& l : m.net().layers()) {
        l.weights.setZero();
        l.bias.setZero();
    }
    m.net().layers().back().bias(2) = 40.0;
    FeatureVector v;
    v.coeffs.fill(0.3);
    v.label = ClassLabel(3);
    const auto [x, y] = to_batch(std::span(&v, 1));
    Gradients grads;
    m.net().loss_and_gradients(x, y, Loss::softmax_cross_entropy, &grads);
    double sq = 0.0;
    for (const auto& w : grads.weights) sq += w.squaredNorm();
    for (const auto& b : grads.bias) sq += b.squaredNorm();
    CHECK(std::sqrt(sq) <= 1e-6);
}

TEST_CASE("relative error is symmetric") {
    auto g = testutil::rng(6);
    for (int i = 0; i < 100; ++i) {
        const double a = testutil::uniform(g, -2, 2), b = testutil::uniform(g, -2, 2);
        CHECK(gradient_relative_error(a, b) == gradient_relative_error(b, a));
    }
    CHECK(gradient_relative_error(0.0, 0.0) == 0.0);
}

TEST_CASE("separable blobs are learnt within 30 epochs") {
    auto g = testutil::rng(7);
    const auto data = blobs(g);
    AdamConfig cfg;
    cfg.seed = 11;
    const auto [model, report] = train_ann(data, cfg);
    std::size_t correct = 0;
    for (const auto& v : data) correct += model.predict_proba(v).argmax() == *v.label;
    CHECK(correct == data.size());
    CHECK(report.train_loss.size() <= 30);
    CHECK(report.chosen_epoch >= 1);
    CHECK(report.chosen_epoch <= report.validation_loss.size());
    const auto best = std::min_element(report.validation_loss.begin(), report.validation_loss.end());
    CHECK(static_cast<std::size_t>(best - report.validation_loss.begin()) + 1 == report.chosen_epoch);
}

TEST_CASE("training is deterministic and inference is repeatable") {
    auto g = testutil::rng(8);
    const auto data = random_features(g, 120);
    AdamConfig cfg;
    cfg.seed = 5;
    cfg.max_epochs = 3;
    const auto a = train_ann(data, cfg).first;
    const auto b = train_ann(data, cfg).first;
    CHECK(a == b);
    CHECK(a.predict_proba(data[0]) == a.predict_proba(data[0]));
    cfg.seed = 6;
    CHECK_FALSE(train_ann(data, cfg).first == a);
}

TEST_CASE("adam steps reduce a convex loss") {
    // one linear layer regressing onto a fixed target
    std::vector<DenseLayer> layers(1);
    layers[0].weights = Eigen::MatrixXd::Constant(2, 3, 0.5);
    layers[0].bias = Eigen::VectorXd::Zero(2);
    DenseNet net(layers);
    Eigen::MatrixXd x(3, 4), y(2, 4);
    x << 1, 0, 2, -1, 0, 1, 1, 1, 3, -2, 0, 1;
    y << 1, 2, 3, 4, -1, 0, 1, 0;
    AdamOptimizer opt(net, AdamParams{0.05});
    const double start = net.loss_and_gradients(x, y, Loss::mean_squared, nullptr);
    double last = start;
    for (int i = 0; i < 300; ++i) {
        Gradients gr;
        last = net.loss_and_gradients(x, y, Loss::mean_squared, &gr);
        opt.step(net, gr);
    }
    CHECK(last < 0.1 * start);
}

}  // TEST_SUITE
