#include <doctest.h>

#include <cmath>

#include "vlnav/errors.hpp"
#include "vlnav/feature_space.hpp"
#include "vlnav/rng.hpp"
#include "vlnav/scene.hpp"
#include "vlnav/simulator.hpp"

using namespace vlnav;

namespace {

double cosine(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

double norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("codebook: deterministic for a fixed seed") {
    const auto a = Codebook::build({"chair"}, 16, 7);
    const auto b = Codebook::build({"chair"}, 16, 7);
    CHECK(a.vec("chair") == b.vec("chair"));
    CHECK(a.other_vector() == b.other_vector());
    const auto c = Codebook::build({"chair"}, 16, 8);
    CHECK(a.vec("chair") != c.vec("chair"));
}

TEST_CASE("codebook: entries are unit and near-orthogonal") {
    const auto cb = Codebook::build(
        {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"}, 16, 3);
    std::vector<std::span<const double>> all;
    for (const auto& [name, vec] : cb.entries()) all.emplace_back(vec);
    all.emplace_back(cb.other_vector());
    for (std::size_t p = 0; p < all.size(); ++p) {
        CHECK(std::abs(norm(all[p]) - 1.0) < 1e-9);
        for (std::size_t q = p + 1; q < all.size(); ++q) {
            CHECK(std::abs(cosine(all[p], all[q])) <=
                  Codebook::kMaxPairwiseCos + 1e-12);
        }
    }
}

TEST_CASE("codebook: too many classes for the dimension fails") {
    std::vector<std::string> names;
    for (int k = 0; k < 40; ++k) names.push_back("class_" + std::to_string(k));
    CHECK_THROWS_AS(Codebook::build(names, 8, 1), ValidationError);
}

TEST_CASE("codebook: rejects duplicates and tiny dims") {
    CHECK_THROWS_AS(Codebook::build({"a", "a"}, 16, 1), ValidationError);
    CHECK_THROWS_AS(Codebook::build({"a"}, 4, 1), ValidationError);
}

TEST_CASE("encode_pixels: zero noise reproduces codebook vectors exactly") {
    const Scene scene = parse_scene(
        R"({"bounds": [6, 6],
            "objects": [{"class": "chair", "min": [3, 2.5, 0], "max": [4, 3.5, 1]}]})",
        "s");
    const auto cb = Codebook::build({"chair", "floor", "wall"}, 16, 7);
    const CameraConfig cam;
    const Observation obs = render(scene, Pose{1.5, 3.0, 0.0}, cam);
    const FeatureImage img = encode_pixels(obs, scene.class_table, cb, 0.0, 1);

    int checked = 0;
    for (int j = 0; j < obs.height; ++j) {
        for (int i = 0; i < obs.width; ++i) {
            if (!obs.valid(i, j)) {
                CHECK_FALSE(img.has(i, j));
                continue;
            }
            REQUIRE(img.has(i, j));
            const std::int16_t id = obs.class_at(i, j);
            const std::string name = id == kClassFloor ? "floor"
                                     : id == kClassWall ? "wall"
                                                        : scene.class_table[id];
            const auto f = img.at(i, j);
            for (int d = 0; d < img.dim; ++d) CHECK(f[d] == cb.vec(name)[d]);
            ++checked;
        }
    }
    CHECK(checked > 1000);
}

TEST_CASE("encode_pixels: noisy features stay close to their class vector") {
    const Scene scene = parse_scene(
        R"({"bounds": [6, 6],
            "objects": [{"class": "chair", "min": [3, 2.5, 0], "max": [4, 3.5, 1]}]})",
        "s");
    const auto cb = Codebook::build({"chair", "floor", "wall"}, 16, 7);
    const Observation obs = render(scene, Pose{1.5, 3.0, 0.0}, CameraConfig{});
    const FeatureImage img = encode_pixels(obs, scene.class_table, cb, 0.1, 42);

    int total = 0, close = 0;
    for (int j = 0; j < obs.height; ++j) {
        for (int i = 0; i < obs.width; ++i) {
            if (!img.has(i, j)) continue;
            const std::int16_t id = obs.class_at(i, j);
            if (id != scene.class_id("chair")) continue;
            ++total;
            close += cosine(img.at(i, j), cb.vec("chair")) > 0.9;
            CHECK(std::abs(norm(img.at(i, j)) - 1.0) < 1e-6);
        }
    }
    REQUIRE(total > 100);
    CHECK(double(close) / total >= 0.99);
}

TEST_CASE("encode_pixels: unknown class id is an error") {
    Observation obs;
    obs.width = obs.height = 1;
    obs.depth = {1.0f};
    obs.class_ids = {5};
    const auto cb = Codebook::build({"chair", "floor", "wall"}, 16, 7);
    CHECK_THROWS_AS(encode_pixels(obs, {"chair"}, cb, 0.0, 1), ValidationError);
}

TEST_CASE("encode_text: lookup, contract, and hashed unknowns") {
    const auto cb = Codebook::build({"chair", "floor", "wall"}, 16, 7);
    const auto m = encode_text({"chair", "floor", "wall", "other"}, cb);
    CHECK(m.cols == 4);
    for (int d = 0; d < m.dim; ++d) {
        CHECK(m.col(0)[d] == cb.vec("chair")[d]);
        CHECK(m.col(3)[d] == cb.other_vector()[d]);
    }

    CHECK_THROWS_AS(encode_text({}, cb), ValidationError);
    CHECK_THROWS_AS(encode_text({"chair", "wall"}, cb), ValidationError);

    const auto u1 = encode_text({"unicorn", "other"}, cb);
    const auto u2 = encode_text({"unicorn", "other"}, cb);
    for (int d = 0; d < u1.dim; ++d) CHECK(u1.col(0)[d] == u2.col(0)[d]);
    CHECK(std::abs(norm(u1.col(0)) - 1.0) < 1e-9);
    for (const auto& [name, vec] : cb.entries()) {
        CHECK(std::abs(cosine(u1.col(0), vec)) <= 0.5);
    }
    CHECK(std::abs(cosine(u1.col(0), cb.other_vector())) <= 0.5);
}

TEST_CASE("segmentation identity: argmax over text columns recovers classes") {
    // The invariant that makes the pipeline verifiable: noise-free pixel
    // features indexed against the full label list reproduce the class image.
    const Scene scene = load_scene(std::string(VLNAV_DATA_DIR) + "/lab.scene");
    std::vector<std::string> labels = scene.class_table;
    labels.insert(labels.end(), {"floor", "wall", "other"});
    const auto cb = Codebook::build(
        {"box", "chair", "couch", "counter", "floor", "wall"}, 16, 7);
    const auto text = encode_text(labels, cb);

    const Observation obs = render(scene, Pose{2.0, 3.0, 0.0}, CameraConfig{});
    const FeatureImage img = encode_pixels(obs, scene.class_table, cb, 0.0, 3);
    for (int j = 0; j < obs.height; ++j) {
        for (int i = 0; i < obs.width; ++i) {
            if (!img.has(i, j)) continue;
            const auto f = img.at(i, j);
            int best = -1;
            double best_s = -2.0;
            for (int c = 0; c < text.cols; ++c) {
                const double s = cosine(f, text.col(c));
                if (s > best_s) {
                    best_s = s;
                    best = c;
                }
            }
            const std::int16_t id = obs.class_at(i, j);
            const std::string truth = id == kClassFloor ? "floor"
                                      : id == kClassWall
                                          ? "wall"
                                          : scene.class_table[id];
            CHECK(labels[best] == truth);
        }
    }
}
