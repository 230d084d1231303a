#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "amlb/neural.hpp"
#include "amlb/timeseries.hpp"

namespace amlb::defense {

enum class Level : uint8_t { off = 0, low = 1, medium = 2, high = 3 };

// Maps a named privacy level to a relative L-inf noise bound (fraction of the
// household's mean power) and a gradient iteration count.
struct PrivacyLevel {
    Level level = Level::off;
    double epsilon = 0.0;
    int steps = 0;

    static PrivacyLevel from(Level level);
    static PrivacyLevel parse(const std::string& name);
    const char* name() const;
};

// LSTM surrogate with its context window length; input scale lives inside the
// classifier.
struct SurrogateModel {
    neural::SequenceClassifier classifier;
    int context_len = 60;
    bool trained = false;
};

struct PerturbedStream {
    std::vector<double> readings;                            // same length as input
    std::vector<std::pair<double, double>> per_window_delta; // (sum before, sum after) per complete window
};

struct BillingCheck {
    double bill_before = 0;
    double bill_after = 0;
    double bill_rel_delta = 0;
    double max_window_delta = 0;    // max over windows of |sum' - sum| / max(1, sum)
};

// Euclidean projection of each complete window onto the zero-sum hyperplane;
// the trailing residual passes through unmodified.
std::vector<double> zero_sum_project(std::span<const double> noise, int window_len);

PerturbedStream perturb(const SurrogateModel& surrogate, std::span<const double> readings,
                        std::span<const uint8_t> occupancy_hint, const PrivacyLevel& level,
                        int window_len);

// max_windows > 0 keeps an evenly strided subset of the context windows.
SurrogateModel train_surrogate(const timeseries::LoadProfile& history, int context_len,
                               const neural::TrainConfig& cfg,
                               const neural::SequenceClassifier* warm_start = nullptr,
                               int max_windows = 0);

BillingCheck verify_billing(const timeseries::LoadProfile& original, const PerturbedStream& perturbed,
                            const timeseries::Tariff& tariff);

// Majority-vote context windows used for surrogate training and evaluation.
neural::Sample make_context_sample(std::span<const double> readings, std::span<const uint8_t> occupancy,
                                   size_t start, size_t len);

}  // namespace amlb::defense
