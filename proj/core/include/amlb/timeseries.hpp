#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "amlb/error.hpp"

namespace amlb::timeseries {

// Per-household consumption trace with occupancy ground truth.
struct LoadProfile {
    std::string household_id;
    int sampling_period_s = 1;
    std::vector<double> readings;       // watts, non-negative
    std::vector<uint8_t> occupancy;     // 0/1, same length as readings

    void validate() const;
    size_t size() const { return readings.size(); }
};

struct BillingWindow {
    int window_len_samples = 2;
    size_t start_index = 0;

    void validate() const {
        if (window_len_samples < 2) throw std::invalid_argument("billing window must span at least 2 samples");
    }
};

// Price schedule; resolution is pinned to a multiple of the billing window so
// window-sum preservation carries over to the bill exactly.
struct Tariff {
    int resolution_samples;
    std::vector<double> rates;          // per kWh, cycled over intervals
    int window_len_samples;

    Tariff(int resolution, std::vector<double> rates_per_kwh, int window_len = 2);
};

struct ApplianceSpec {
    double power_w;
    double mean_duration_s;
};

struct GeneratorParams {
    double base_load_w = 120.0;
    std::vector<ApplianceSpec> appliance_pool = {
        {1400.0, 240.0},    // kettle / microwave bursts
        {700.0, 1200.0},    // heater, oven
        {250.0, 2400.0},    // tv + lighting
    };
    double occupied_event_rate = 18.0;      // appliance starts per hour while occupied
    double unoccupied_event_rate = 0.6;     // fridge/compressor cycles while away
    double occupancy_segment_mean_s = 3.0 * 3600.0;
    double noise_std_w = 8.0;
    uint64_t seed = 0;

    void validate() const;
};

// Non-overlapping complete windows plus the untouched tail.
struct WindowSlices {
    std::vector<std::span<const double>> windows;
    std::span<const double> residual;
    bool has_residual() const { return !residual.empty(); }
};

LoadProfile generate_profile(const GeneratorParams& params, int64_t duration_s);

WindowSlices window_slices(std::span<const double> readings, int window_len);

double window_energy_wh(std::span<const double> readings, int sampling_period_s);

double compute_bill(const LoadProfile& profile, const Tariff& tariff);

// CSV columns: timestamp,watts,occupancy. Timestamps are integer Unix seconds
// at a uniform spacing; that spacing becomes the sampling period.
LoadProfile ingest_csv(const std::filesystem::path& path, const std::string& household_id = "");
void export_csv(const LoadProfile& profile, const std::filesystem::path& path, int64_t start_timestamp = 0);

}  // namespace amlb::timeseries
