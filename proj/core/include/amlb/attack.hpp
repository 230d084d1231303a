#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "amlb/neural.hpp"

namespace amlb::attack {

// Window statistics the occupancy detector consumes.
struct FeatureVector {
    double mean_w = 0;
    double std_w = 0;
    double min_w = 0;
    double max_w = 0;
    double range_w = 0;
    double sum_abs_diff_w = 0;
    int onoff_events = 0;

    static constexpr size_t kCount = 7;
    std::vector<double> to_vec() const {
        return {mean_w, std_w, min_w, max_w, range_w, sum_abs_diff_w, double(onoff_events)};
    }
};

// Per-feature standardization fitted on the training set.
struct FeatureScaler {
    std::vector<double> mean;
    std::vector<double> std;

    std::vector<double> transform(std::span<const double> raw) const;
};

struct AttackModel {
    FeatureScaler scaler;
    neural::Mlp net;        // 7 -> 32 -> 16 -> 1
    double onoff_threshold_w = 0;

    double predict(std::span<const double> window) const;
};

struct Metrics {
    double accuracy = 0, precision = 0, recall = 0, f1 = 0;
    uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

    static Metrics from_counts(uint64_t tp, uint64_t fp, uint64_t fn, uint64_t tn);
};

FeatureVector extract_features(std::span<const double> window, double onoff_threshold_w);

struct LabeledWindows {
    std::vector<std::vector<double>> windows;
    std::vector<uint8_t> labels;
};

AttackModel train_attacker(const LabeledWindows& training, const neural::TrainConfig& cfg,
                           double onoff_threshold_w);

Metrics evaluate(const AttackModel& model, const LabeledWindows& test, double decision_threshold = 0.5);

Bytes save_attack_model(const AttackModel& model);
AttackModel load_attack_model(std::span<const uint8_t> bytes);

}  // namespace amlb::attack
