#include <doctest.h>

#include <set>

#include <boost/math/distributions/students_t.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "sentinel/error.hpp"
#include "sentinel/eval.hpp"
#include "sentinel/stats.hpp"
#include "sentinel/synth.hpp"
#include "support.hpp"

using namespace sentinel;
using Big = boost::multiprecision::cpp_bin_float_50;

namespace {

struct OracleT {
    double t, df, p;
};

// 50-digit evaluation of the same statistics through Boost.Math.
OracleT paired_oracle(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    Big mean = 0;
    for (std::size_t i = 0; i < n; ++i) mean += Big(a[i]) - Big(b[i]);
    mean /= n;
    Big ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const Big d = Big(a[i]) - Big(b[i]) - mean;
        ss += d * d;
    }
    const Big sd = sqrt(ss / (n - 1));
    const Big t = mean / (sd / sqrt(Big(n)));
    const boost::math::students_t_distribution<Big> dist(Big(n - 1));
    const Big p = 2 * cdf(complement(dist, abs(t)));
    return {t.convert_to<double>(), static_cast<double>(n - 1), p.convert_to<double>()};
}

OracleT welch_oracle(const std::vector<double>& a, const std::vector<double>& b) {
    auto moments = [](const std::vector<double>& x) {
        Big m = 0;
        for (double v : x) m += v;
        m /= x.size();
        Big ss = 0;
        for (double v : x) ss += (Big(v) - m) * (Big(v) - m);
        return std::pair<Big, Big>{m, ss / (x.size() - 1)};
    };
    const auto [ma, va] = moments(a);
    const auto [mb, vb] = moments(b);
    const Big qa = va / a.size(), qb = vb / b.size();
    const Big t = (ma - mb) / sqrt(qa + qb);
    const Big df = (qa + qb) * (qa + qb) / (qa * qa / (a.size() - 1) + qb * qb / (b.size() - 1));
    const boost::math::students_t_distribution<Big> dist(df);
    const Big p = 2 * cdf(complement(dist, abs(t)));
    return {t.convert_to<double>(), df.convert_to<double>(), p.convert_to<double>()};
}

std::vector<double> draw(std::mt19937_64& g, std::size_t n, double shift) {
    std::vector<double> v(n);
    std::normal_distribution<double> d(shift, 1.0);
    for (double& x : v) x = d(g);
    return v;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("accuracy and confusion") {
    const std::vector<ClassLabel> truth{ClassLabel(1), ClassLabel(2), ClassLabel(3), ClassLabel(4)};
    CHECK(accuracy(truth, truth) == 1.0);
    const std::vector<ClassLabel> half{ClassLabel(1), ClassLabel(2), ClassLabel(1), ClassLabel(1)};
    CHECK(accuracy(half, truth) == 0.5);
    const Confusion c = confusion_matrix(half, truth);
    CHECK(c[2][0] == 1);
    CHECK(c[3][0] == 1);
    CHECK(c[0][0] == 1);
    CHECK_THROWS_AS(accuracy(std::vector<ClassLabel>{}, std::vector<ClassLabel>{}), Error);
    CHECK_THROWS_AS(accuracy(half, std::span(truth.data(), 3)), Error);
}

TEST_CASE("property: accuracy equals the trace of the confusion matrix over a count oracle") {
    auto g = testutil::rng(1);
    std::uniform_int_distribution<int> cls(1, 6);
    for (int trial = 0; trial < 100; ++trial) {
        const auto n = std::uniform_int_distribution<std::size_t>(1, 200)(g);
        std::vector<ClassLabel> p, t;
        std::size_t hits = 0;
        for (std::size_t i = 0; i < n; ++i) {
            p.emplace_back(cls(g));
            t.emplace_back(cls(g));
            hits += p.back() == t.back();
        }
        const Confusion c = confusion_matrix(p, t);
        std::size_t trace = 0, total = 0;
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t j = 0; j < 6; ++j) total += c[i][j], trace += i == j ? c[i][j] : 0;
        CHECK(total == n);
        CHECK(trace == hits);
        CHECK(accuracy(p, t) == doctest::Approx(static_cast<double>(hits) / static_cast<double>(n)).epsilon(1e-15));
    }
}

TEST_CASE("paired t-test worked example") {
    const std::vector<double> a{1, 2, 3}, b{0, 0, 0};
    const auto r = paired_ttest(a, b);
    CHECK(r.t == doctest::Approx(2.0 * std::sqrt(3.0)).epsilon(1e-12));
    CHECK(r.df == 2.0);
    const auto o = paired_oracle(a, b);
    CHECK(std::abs(r.p - o.p) <= 1e-6);
    CHECK(r.p == doctest::Approx(0.0742).epsilon(1e-3));
    CHECK(paired_ttest(b, a).t == doctest::Approx(-r.t));
    CHECK_THROWS_AS(paired_ttest(a, a), DegenerateError);
    const std::vector<double> c{2, 3, 4};
    CHECK_THROWS_AS(paired_ttest(c, a), DegenerateError);  // constant difference
}

TEST_CASE("Welch t-test worked example") {
    const std::vector<double> a{1, 2, 3, 4}, b{3, 4, 5, 6};
    const auto r = unpaired_ttest(a, b);
    CHECK(r.t == doctest::Approx(-2.0 / std::sqrt(5.0 / 6.0)).epsilon(1e-12));
    CHECK(r.df == doctest::Approx(6.0).epsilon(1e-12));
    const auto o = welch_oracle(a, b);
    CHECK(std::abs(r.p - o.p) <= 1e-6);
    CHECK(r.p == doctest::Approx(0.0709).epsilon(2e-3));
    const auto s = unpaired_ttest(b, a);
    CHECK(s.t == doctest::Approx(-r.t));
    CHECK(s.p == doctest::Approx(r.p));
    const std::vector<double> k{2, 2, 2};
    CHECK_THROWS_AS(unpaired_ttest(k, k), DegenerateError);
}

TEST_CASE("property: t-tests match the 50-digit oracle") {
    auto g = testutil::rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        const auto n = std::uniform_int_distribution<std::size_t>(2, 60)(g);
        const auto a = draw(g, n, testutil::uniform(g, -1, 1)), b = draw(g, n, 0.0);
        const auto r = paired_ttest(a, b);
        const auto o = paired_oracle(a, b);
        CHECK(std::abs(r.t - o.t) <= 1e-9 * std::max(1.0, std::abs(o.t)));
        CHECK(std::abs(r.p - o.p) <= 1e-6);

        const auto m = std::uniform_int_distribution<std::size_t>(2, 60)(g);
        const auto c = draw(g, m, testutil::uniform(g, -1, 1));
        const auto w = unpaired_ttest(a, c);
        const auto ow = welch_oracle(a, c);
        CHECK(std::abs(w.t - ow.t) <= 1e-9 * std::max(1.0, std::abs(ow.t)));
        CHECK(std::abs(w.df - ow.df) <= 1e-9 * ow.df);
        CHECK(std::abs(w.p - ow.p) <= 1e-6);
    }
}

TEST_CASE("Student t CDF against Boost across fractional df") {
    auto g = testutil::rng(3);
    for (int i = 0; i < 200; ++i) {
        const double df = std::exp(testutil::uniform(g, std::log(0.5), std::log(500.0)));
        const double t = testutil::uniform(g, -8, 8);
        const boost::math::students_t_distribution<double> d(df);
        CHECK(stats::student_t_cdf(t, df) == doctest::Approx(boost::math::cdf(d, t)).epsilon(1e-10).scale(1.0));
    }
}

TEST_CASE("normal quantile round trip") {
    for (double p : {1e-12, 1e-6, 0.01, 0.3, 0.5, 0.77, 0.999, 1 - 1e-9})
        CHECK(stats::normal_cdf(stats::normal_quantile(p)) == doctest::Approx(p).epsilon(1e-9));
    CHECK(std::isinf(stats::normal_quantile(0.0)));
}

TEST_CASE("evaluate_predictions rejects mismatches") {
    auto g = testutil::rng(4);
    const Dataset d = testutil::random_dataset(g, 1);
    std::vector<FramePrediction> preds(5);
    CHECK_THROWS_AS(evaluate_predictions(d, preds, "I", "ANN", "M"), Error);
    preds.resize(6);
    for (std::size_t i = 0; i < 6; ++i) preds[i].final_class = ClassLabel(1);
    const auto r = evaluate_predictions(d, preds, "I", "ANN", "M");
    CHECK(r.accuracy == doctest::Approx(1.0 / 6.0));
    CHECK(r.n_frames == 6);
    CHECK_THROWS_AS(evaluate_predictions(Dataset{}, std::vector<FramePrediction>{}, "I", "ANN", "M"), Error);
}

TEST_CASE("grid bookkeeping at reduced scale") {
    SynthConstants c;
    c.frames_per_class = 10;
    Series s = generate_series(5, c);
    std::map<std::string, Dataset> data(s.datasets.begin(), s.datasets.end());
    GridConfig cfg;
    cfg.kernels = 60;
    cfg.autoencoder_test_sets = {"T1", "T3"};
    const GridReport r = run_grid(data, cfg);

    CHECK(r.cells.size() == 100);
    CHECK(r.auxiliary.size() == 32);
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0].find("T3") != std::string::npos);
    std::size_t with_a = 0;
    std::set<std::string> keys;
    for (const auto& e : r.cells) {
        with_a += e.variant == "V+M+S+A";
        if (e.variant == "V+M+S+A") CHECK(e.test_set == "T1");
        keys.insert(e.model + e.classifier + e.variant + e.test_set);
        CHECK(e.n_frames == 60);
    }
    CHECK(with_a == 4);
    CHECK(keys.size() == 100);

    auto find = [&](const std::string& name) -> const Comparison& {
        for (const auto& c : r.comparisons)
            if (c.name == name) return c;
        FAIL("missing comparison " << name);
        throw;
    };
    // the smoothing comparison holds exactly the M/M+S and V+M/V+M+S pairs, in order
    const Comparison& sm = find("smoothing");
    REQUIRE(sm.a.size() == 64);
    std::size_t i = 0;
    for (std::string m : {"I", "II"})
        for (std::string k : {"ANN", "ROCKET"})
            for (auto [plain, smoothed] : {std::pair<std::string, std::string>{"M", "M+S"}, {"V+M", "V+M+S"}})
                for (const auto& t : kTestSets) {
                    CHECK(sm.a[i] == r.cell(m, k, smoothed, t).accuracy);
                    CHECK(sm.b[i] == r.cell(m, k, plain, t).accuracy);
                    ++i;
                }
    CHECK(find("training_diversity").a.size() == 24);
    CHECK(find("voting").a.size() == 4);
    CHECK(find("alignment").a.size() == 32);
    CHECK_FALSE(find("within_vs_between_pump").paired);

    const std::string csv = results_csv(r.cells);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 101);
    const std::string table = format_grid_table(r);
    CHECK(table.find("T8") != std::string::npos);
    CHECK(summary_csv(r.comparisons).find("smoothing") != std::string::npos);

    data.erase("T4");
    CHECK_THROWS_AS(run_grid(data, cfg), Error);
}

}  // TEST_SUITE
