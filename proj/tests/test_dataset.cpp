#include <doctest.h>

#include <fstream>
#include <numeric>
#include <set>

#include <json.hpp>

#include "sentinel/dataset.hpp"
#include "sentinel/error.hpp"
#include "sentinel/json_codec.hpp"
#include "support.hpp"

using namespace sentinel;

TEST_SUITE("dataset") {

TEST_CASE("class label groups") {
    for (int id : kHealthyIds) CHECK(ClassLabel(id).healthy());
    for (int id : kAnomalyIds) CHECK(ClassLabel(id).anomaly());
    CHECK_THROWS_AS(ClassLabel(0), Error);
    CHECK_THROWS_AS(ClassLabel(7), Error);
    CHECK(ClassLabel::from_index(5).id() == 6);
}

TEST_CASE("two-line file loads in order") {
    auto g = testutil::rng(1);
    Dataset d;
    d.frames = {testutil::random_frame(g, 1, 10), testutil::random_frame(g, 4, 20)};
    const auto dir = testutil::scratch_dir("two-line");
    save_jsonl(d, dir / "d.jsonl");
    const Dataset back = load_jsonl(dir / "d.jsonl");
    REQUIRE(back.size() == 2);
    CHECK(back.frames[0] == d.frames[0]);
    CHECK(back.frames[1] == d.frames[1]);
}

TEST_CASE("511-sample axis is rejected with its length") {
    auto g = testutil::rng(2);
    nlohmann::json j = frame_to_json(testutil::random_frame(g));
    j["x"].erase(j["x"].size() - 1);
    const auto dir = testutil::scratch_dir("short-axis");
    {
        std::ofstream out(dir / "bad.jsonl");
        out << j.dump() << '\n';
    }
    try {
        load_jsonl(dir / "bad.jsonl");
        FAIL("expected a parse error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("axis x: expected 512, got 511") != std::string::npos);
    }
    CHECK_THROWS_WITH_AS(frame_from_json(j), "axis x: expected 512, got 511", ParseError);
}

TEST_CASE("malformed frames") {
    auto g = testutil::rng(3);
    const nlohmann::json good = frame_to_json(testutil::random_frame(g));
    auto j = good;
    j.erase("pump_id");
    CHECK_THROWS_AS(frame_from_json(j), ParseError);
    j = good;
    j["timestamp"] = "soon";
    CHECK_THROWS_AS(frame_from_json(j), ParseError);
    j = good;
    j["label"] = 9;
    CHECK_THROWS_AS(frame_from_json(j), ParseError);
    j = good;
    j["y"][3] = "x";
    CHECK_THROWS_AS(frame_from_json(j), ParseError);
    j = good;
    j.erase("label");
    CHECK_FALSE(frame_from_json(j).label.has_value());
}

TEST_CASE("non-finite samples fail validation") {
    auto g = testutil::rng(4);
    Frame f = testutil::random_frame(g);
    f.z[100] = std::nan("");
    CHECK_THROWS_AS(validate_frame(f), Error);
}

TEST_CASE("timestamps may not decrease within a pump") {
    auto g = testutil::rng(5);
    Dataset d;
    d.frames = {testutil::random_frame(g, 1, 100, "A"), testutil::random_frame(g, 1, 50, "B"),
                testutil::random_frame(g, 1, 200, "A")};
    CHECK_NOTHROW(validate_dataset(d));
    d.frames.push_back(testutil::random_frame(g, 1, 150, "A"));
    CHECK_THROWS_AS(validate_dataset(d), Error);
}

TEST_CASE("empty dataset writes an empty file, one frame writes one line") {
    const auto dir = testutil::scratch_dir("sizes");
    save_jsonl(Dataset{}, dir / "empty.jsonl");
    CHECK(std::filesystem::file_size(dir / "empty.jsonl") == 0);
    CHECK(load_jsonl(dir / "empty.jsonl").empty());

    auto g = testutil::rng(6);
    Dataset one;
    one.frames.push_back(testutil::random_frame(g));
    save_jsonl(one, dir / "one.jsonl");
    std::ifstream in(dir / "one.jsonl");
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 1);
}

TEST_CASE("property: load after save is the identity") {
    const auto dir = testutil::scratch_dir("roundtrip");
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
        auto g = testutil::rng(100 + trial);
        Dataset d;
        const auto n = std::uniform_int_distribution<int>(0, 6)(g);
        std::int64_t ts = std::uniform_int_distribution<std::int64_t>(-1'000'000, 1'000'000)(g);
        for (int i = 0; i < n; ++i) {
            const int label = std::uniform_int_distribution<int>(0, 6)(g);  // 0 = unlabeled
            Frame f = testutil::random_frame(g, label, ts += 17, "pump-" + std::to_string(trial));
            // extreme magnitudes exercise the shortest round-trip printing
            f.x[0] = std::ldexp(testutil::uniform(g, -1.0, 1.0), std::uniform_int_distribution<int>(-300, 300)(g));
            f.y[1] = 0.1 + 0.2;
            d.frames.push_back(f);
        }
        save_jsonl(d, dir / "d.jsonl");
        const Dataset back = load_jsonl(dir / "d.jsonl");
        REQUIRE(back.frames.size() == d.frames.size());
        CHECK(back.frames == d.frames);
    }
}

TEST_CASE("stratified split: 10 per class at 0.5 gives 5 and 5") {
    auto g = testutil::rng(7);
    const Dataset d = testutil::random_dataset(g, 10);
    const auto [train, test] = stratified_split(d, 0.5, 42);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        CHECK(class_counts(train)[c] == 5);
        CHECK(class_counts(test)[c] == 5);
    }
    const auto again = stratified_split(d, 0.5, 42);
    CHECK(again.first == train);
    CHECK(again.second == test);
}

TEST_CASE("stratified split sizes follow floor(n * f) exactly") {
    // Oracle: integer arithmetic floor(n * num / den) over a grid of
    // fractions num/100 and class sizes.
    auto g = testutil::rng(8);
    for (std::size_t n : {2u, 3u, 7u, 10u, 33u, 100u}) {
        const Dataset d = testutil::random_dataset(g, n);
        for (int num = 1; num < 100; num += 7) {
            const double f = num / 100.0;
            const std::size_t expected = n * static_cast<std::size_t>(num) / 100;
            const auto [train, test] = stratified_split(d, f, 3);
            for (std::size_t c = 0; c < kNumClasses; ++c) {
                CHECK(class_counts(test)[c] == expected);
                CHECK(class_counts(train)[c] == n - expected);
            }
        }
    }
    const Dataset ten = testutil::random_dataset(g, 10);
    CHECK(class_counts(stratified_split(ten, 0.3, 1).second)[0] == 3);
    CHECK(class_counts(stratified_split(testutil::random_dataset(g, 100), 0.29, 1).second)[2] == 29);
}

TEST_CASE("stratified split keeps input order and partitions the frames") {
    auto g = testutil::rng(9);
    Dataset d = testutil::random_dataset(g, 8);
    for (std::size_t i = 0; i < d.frames.size(); ++i) d.frames[i].timestamp_ms = static_cast<std::int64_t>(i);
    const auto [train, test] = stratified_split(d, 0.25, 5);
    CHECK(train.size() + test.size() == d.size());
    std::set<std::int64_t> seen;
    for (const auto* side : {&train, &test}) {
        for (std::size_t i = 1; i < side->size(); ++i)
            CHECK(side->frames[i - 1].timestamp_ms < side->frames[i].timestamp_ms);
        for (const auto& f : side->frames) seen.insert(f.timestamp_ms);
    }
    CHECK(seen.size() == d.size());
    CHECK_THROWS_AS(stratified_split(d, 0.0, 1), Error);
    CHECK_THROWS_AS(stratified_split(d, 1.0, 1), Error);
}

TEST_CASE("concat joins provenance") {
    auto g = testutil::rng(10);
    Dataset a = testutil::random_dataset(g, 1), b = testutil::random_dataset(g, 2);
    a.provenance = "A";
    b.provenance = "B";
    const Dataset c = concat({a, b});
    CHECK(c.provenance == "A+B");
    CHECK(c.size() == 18);
}

}  // TEST_SUITE
