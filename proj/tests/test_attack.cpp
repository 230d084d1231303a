#include <doctest.h>

#include <random>

#include "amlb/attack.hpp"

using namespace amlb;
using namespace amlb::attack;

namespace {

// Constant-low vs constant-high windows, trivially separable.
LabeledWindows toy_set(size_t per_class, size_t len) {
    LabeledWindows set;
    for (size_t i = 0; i < per_class; ++i) {
        set.windows.emplace_back(len, 10.0 + double(i % 3));
        set.labels.push_back(0);
        set.windows.emplace_back(len, 500.0 + double(i % 5));
        set.labels.push_back(1);
    }
    return set;
}

}  // namespace

TEST_CASE("extract_features statistics") {
    std::vector<double> flat{5, 5, 5, 5};
    auto f = extract_features(flat, 100.0);
    CHECK(f.mean_w == 5.0);
    CHECK(f.std_w == 0.0);
    CHECK(f.min_w == 5.0);
    CHECK(f.max_w == 5.0);
    CHECK(f.range_w == 0.0);
    CHECK(f.sum_abs_diff_w == 0.0);
    CHECK(f.onoff_events == 0);

    std::vector<double> step{0, 10};
    auto g = extract_features(step, 5.0);
    CHECK(g.sum_abs_diff_w == 10.0);
    CHECK(g.onoff_events == 1);

    std::vector<double> ramp{1, 2, 3};
    auto h = extract_features(ramp, 100.0);
    CHECK(h.mean_w == 2.0);
    CHECK(h.range_w == 2.0);
    CHECK(h.sum_abs_diff_w == 2.0);

    CHECK_THROWS_AS(extract_features(std::vector<double>{}, 5.0), std::invalid_argument);
}

TEST_CASE("metrics from a known confusion matrix") {
    auto m = Metrics::from_counts(2, 1, 1, 6);
    CHECK(m.precision == doctest::Approx(2.0 / 3.0));
    CHECK(m.recall == doctest::Approx(2.0 / 3.0));
    CHECK(m.accuracy == doctest::Approx(0.8));
    CHECK(m.f1 == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("metrics identities hold for fuzzed confusion counts") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 500; ++trial) {
        uint64_t tp = rng() % 50, fp = rng() % 50, fn = rng() % 50, tn = rng() % 50;
        if (tp + fp + fn + tn == 0) continue;
        auto m = Metrics::from_counts(tp, fp, fn, tn);
        CHECK(m.accuracy == doctest::Approx(double(tp + tn) / double(tp + fp + fn + tn)));
        if (tp + fp == 0) CHECK(m.precision == 0.0);
        if (tp + fn == 0) CHECK(m.recall == 0.0);
        if (m.precision + m.recall > 0)
            CHECK(m.f1 == doctest::Approx(2 * m.precision * m.recall / (m.precision + m.recall)));
        else
            CHECK(m.f1 == 0.0);
        CHECK(m.accuracy >= 0.0);
        CHECK(m.accuracy <= 1.0);
        CHECK(m.f1 >= 0.0);
        CHECK(m.f1 <= 1.0);
    }
}

TEST_CASE("trained attacker nails a separable toy set") {
    auto train_set = toy_set(30, 20);
    neural::TrainConfig cfg;
    cfg.epochs = 30;
    cfg.seed = 5;
    auto model = train_attacker(train_set, cfg, 100.0);
    auto m = evaluate(model, train_set);
    CHECK(m.accuracy == 1.0);
    CHECK(m.f1 == 1.0);
}

TEST_CASE("an always-positive predictor scores the base rate on a balanced set") {
    AttackModel model;
    model.onoff_threshold_w = 100.0;
    model.scaler.mean.assign(FeatureVector::kCount, 0.0);
    model.scaler.std.assign(FeatureVector::kCount, 1.0);
    model.net = neural::make_mlp({FeatureVector::kCount, 4, 1}, 1);
    for (auto& layer : model.net.layers) {
        std::fill(layer.weights.a.begin(), layer.weights.a.end(), 0.0);
        std::fill(layer.biases.begin(), layer.biases.end(), 0.0);
    }
    model.net.layers.back().biases[0] = 50.0;    // sigmoid(50) ~ 1

    auto set = toy_set(20, 10);
    auto m = evaluate(model, set);
    CHECK(m.accuracy == doctest::Approx(0.5));
    CHECK(m.recall == doctest::Approx(1.0));
    CHECK(m.precision == doctest::Approx(0.5));
}

TEST_CASE("train_attacker rejects degenerate inputs and is seed-deterministic") {
    LabeledWindows single;
    single.windows = {{1.0, 2.0}, {3.0, 4.0}};
    single.labels = {1, 1};
    neural::TrainConfig cfg;
    cfg.epochs = 2;
    CHECK_THROWS_AS(train_attacker(single, cfg, 5.0), std::invalid_argument);
    CHECK_THROWS_AS(train_attacker(LabeledWindows{}, cfg, 5.0), std::invalid_argument);

    auto set = toy_set(10, 8);
    cfg.seed = 77;
    cfg.epochs = 8;
    auto a = evaluate(train_attacker(set, cfg, 100.0), set);
    auto b = evaluate(train_attacker(set, cfg, 100.0), set);
    CHECK(a.accuracy == b.accuracy);
    CHECK(a.tp == b.tp);
    CHECK(a.fp == b.fp);

    CHECK_THROWS_AS(evaluate(train_attacker(set, cfg, 100.0), LabeledWindows{}), std::invalid_argument);
}

TEST_CASE("attack model serialization round-trips") {
    auto set = toy_set(10, 8);
    neural::TrainConfig cfg;
    cfg.epochs = 3;
    cfg.seed = 4;
    auto model = train_attacker(set, cfg, 100.0);
    const Bytes bytes = save_attack_model(model);
    auto loaded = load_attack_model(bytes);
    CHECK(save_attack_model(loaded) == bytes);
    CHECK(loaded.predict(set.windows[0]) == model.predict(set.windows[0]));
    CHECK_THROWS_AS(load_attack_model(Bytes{}), CodecError);
}
