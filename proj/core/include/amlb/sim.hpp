#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "amlb/attack.hpp"
#include "amlb/defense.hpp"
#include "amlb/ledger.hpp"
#include "amlb/neural.hpp"
#include "amlb/timeseries.hpp"

namespace amlb::sim {

inline constexpr const char* kVersion = "0.1.0";

// Every entity seed is derived from the master seed as
// SHA-256(master u64 BE || role || index u32 BE) truncated to 64 bits.
uint64_t derive_seed(uint64_t master, const std::string& role, uint32_t index);

struct SimConfig {
    int households = 20;
    int64_t duration_s = 48 * 3600;
    timeseries::GeneratorParams generator;    // per-household seeds are derived, generator.seed is ignored
    int billing_window = 2;
    int attack_window = 60;
    int surrogate_context = 60;
    defense::Level level = defense::Level::high;
    timeseries::Tariff tariff{1800, {0.12}, 2};
    uint32_t chain_difficulty = 12;
    int reporting_epochs = 2;
    double train_fraction = 0.7;

    neural::TrainConfig attacker_cfg{0.005, 12, 64, neural::TrainConfig::Optimizer::adam, 0};
    neural::TrainConfig surrogate_cfg{0.02, 24, 16, neural::TrainConfig::Optimizer::adam, 0};
    neural::TrainConfig population_cfg{0.02, 10, 16, neural::TrainConfig::Optimizer::adam, 0};
    int surrogate_warm_epochs = 10;

    // Training-set caps keep the single-threaded run inside its time budget.
    int surrogate_max_windows = 1200;
    int population_max_windows = 2400;

    uint64_t master_seed = 42;

    void validate() const;
    size_t train_len(size_t profile_len) const;
};

struct SetupResult {
    ledger::Chain chain;
    neural::SequenceClassifier population_model;
    size_t meter_transactions = 0;
    double mean_mining_attempts = 0;
};

struct HouseholdStream {
    std::string household_id;
    timeseries::LoadProfile test_profile;     // original readings + local ground truth
    defense::PerturbedStream perturbed;
};

struct LevelResult {
    defense::PrivacyLevel level;
    attack::Metrics metrics;
    std::vector<defense::BillingCheck> billing;    // per household
};

struct ExperimentReport {
    SimConfig config;
    size_t chain_blocks = 0;
    double mean_mining_attempts = 0;
    attack::Metrics pre;
    std::vector<LevelResult> post_by_level;    // off, low, medium, high
    double max_window_delta = 0;
    double max_bill_rel_delta = 0;
    uint64_t seed = 0;
    std::string version = kVersion;
    std::optional<std::string> error;

    // Stable key order; byte-identical for equal configs.
    std::string to_json() const;
};

using ProgressFn = std::function<void(const std::string&)>;

SetupResult run_setup_phase(const SimConfig& cfg, const ProgressFn& progress = nullptr);

std::vector<HouseholdStream> run_online_phase(const SimConfig& cfg,
                                              const neural::SequenceClassifier& population_model,
                                              const ProgressFn& progress = nullptr);

ExperimentReport run_experiment(const SimConfig& cfg, const ProgressFn& progress = nullptr);

// Non-overlapping analysis windows with majority labels over a slice of a profile.
attack::LabeledWindows collect_windows(std::span<const double> readings,
                                       std::span<const uint8_t> occupancy, size_t begin, size_t end,
                                       int window_len);

}  // namespace amlb::sim
