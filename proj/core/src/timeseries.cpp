#include "amlb/timeseries.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>

namespace amlb::timeseries {

void LoadProfile::validate() const {
    if (readings.size() != occupancy.size())
        throw std::invalid_argument("readings and occupancy length mismatch");
    if (sampling_period_s < 1) throw std::invalid_argument("sampling period must be >= 1 s");
    for (double r : readings)
        if (!(r >= 0.0)) throw std::invalid_argument("negative or non-finite reading");
    for (uint8_t o : occupancy)
        if (o > 1) throw std::invalid_argument("occupancy label must be 0 or 1");
}

void GeneratorParams::validate() const {
    if (base_load_w < 0) throw std::invalid_argument("base load must be non-negative");
    // equal rates are allowed: they define the signal-free null profile
    if (occupied_event_rate < unoccupied_event_rate)
        throw std::invalid_argument("occupied event rate must be at least the unoccupied rate");
    if (occupancy_segment_mean_s <= 0) throw std::invalid_argument("occupancy dwell mean must be positive");
    if (noise_std_w < 0) throw std::invalid_argument("noise std must be non-negative");
    for (const auto& a : appliance_pool)
        if (a.power_w < 0 || a.mean_duration_s <= 0)
            throw std::invalid_argument("appliance power must be >= 0 and duration > 0");
}

Tariff::Tariff(int resolution, std::vector<double> rates_per_kwh, int window_len)
    : resolution_samples(resolution), rates(std::move(rates_per_kwh)), window_len_samples(window_len) {
    if (window_len < 2) throw std::invalid_argument("billing window must span at least 2 samples");
    if (resolution <= 0) throw std::invalid_argument("tariff resolution must be positive");
    if (resolution % window_len != 0)
        throw std::invalid_argument("tariff resolution must be a multiple of the billing window");
    if (rates.empty()) throw std::invalid_argument("tariff needs at least one rate");
    for (double r : rates)
        if (!(r >= 0.0)) throw std::invalid_argument("tariff rates must be non-negative");
}

LoadProfile generate_profile(const GeneratorParams& params, int64_t duration_s) {
    params.validate();
    if (duration_s <= 0) throw std::invalid_argument("duration must be positive");

    const size_t n = size_t(duration_s);  // 1 Hz sampling
    std::mt19937_64 rng(params.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::exponential_distribution<double> dwell(1.0 / params.occupancy_segment_mean_s);
    std::normal_distribution<double> noise(0.0, params.noise_std_w);

    LoadProfile profile;
    profile.sampling_period_s = 1;
    profile.readings.assign(n, params.base_load_w);
    profile.occupancy.assign(n, 0);

    // Two-state semi-Markov occupancy with exponential dwell times.
    bool occupied = unit(rng) < 0.5;
    size_t t = 0;
    while (t < n) {
        size_t len = std::max<size_t>(1, size_t(std::llround(dwell(rng))));
        size_t end = std::min(n, t + len);
        std::fill(profile.occupancy.begin() + t, profile.occupancy.begin() + end, occupied ? 1 : 0);
        t = end;
        occupied = !occupied;
    }

    // Poisson appliance starts, rate per state; each start adds a rectangle.
    if (!params.appliance_pool.empty()) {
        std::uniform_int_distribution<size_t> pick(0, params.appliance_pool.size() - 1);
        const double p_occ = params.occupied_event_rate / 3600.0;
        const double p_vac = params.unoccupied_event_rate / 3600.0;
        for (size_t s = 0; s < n; ++s) {
            double p = profile.occupancy[s] ? p_occ : p_vac;
            if (unit(rng) < p) {
                const auto& a = params.appliance_pool[pick(rng)];
                std::exponential_distribution<double> dur(1.0 / a.mean_duration_s);
                size_t len = std::max<size_t>(1, size_t(std::llround(dur(rng))));
                size_t end = std::min(n, s + len);
                for (size_t k = s; k < end; ++k) profile.readings[k] += a.power_w;
            }
        }
    }

    if (params.noise_std_w > 0) {
        for (size_t s = 0; s < n; ++s) profile.readings[s] = std::max(0.0, profile.readings[s] + noise(rng));
    }
    return profile;
}

WindowSlices window_slices(std::span<const double> readings, int window_len) {
    if (window_len < 2) throw std::invalid_argument("billing window must span at least 2 samples");
    WindowSlices out;
    const size_t w = size_t(window_len);
    const size_t complete = readings.size() / w;
    out.windows.reserve(complete);
    for (size_t i = 0; i < complete; ++i) out.windows.push_back(readings.subspan(i * w, w));
    out.residual = readings.subspan(complete * w);
    return out;
}

double window_energy_wh(std::span<const double> readings, int sampling_period_s) {
    if (sampling_period_s < 1) throw std::invalid_argument("sampling period must be >= 1 s");
    double sum = 0.0;
    for (double r : readings) sum += r;
    return sum * double(sampling_period_s) / 3600.0;
}

double compute_bill(const LoadProfile& profile, const Tariff& tariff) {
    if (tariff.rates.empty()) throw std::invalid_argument("tariff needs at least one rate");
    const size_t n = profile.readings.size();
    const size_t res = size_t(tariff.resolution_samples);
    double bill = 0.0;
    for (size_t start = 0, interval = 0; start < n; start += res, ++interval) {
        size_t end = std::min(n, start + res);
        double wh = window_energy_wh(std::span(profile.readings).subspan(start, end - start),
                                     profile.sampling_period_s);
        bill += wh / 1000.0 * tariff.rates[interval % tariff.rates.size()];
    }
    return bill;
}

namespace {

// strict field parsers; leading/trailing junk is a row error
int64_t parse_i64(std::string_view field, size_t line) {
    int64_t v = 0;
    auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || p != field.data() + field.size())
        throw ParseError("malformed integer field \"" + std::string(field) + "\"", line);
    return v;
}

double parse_f64(std::string_view field, size_t line) {
    double v = 0;
    auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || p != field.data() + field.size())
        throw ParseError("malformed number field \"" + std::string(field) + "\"", line);
    return v;
}

}  // namespace

LoadProfile ingest_csv(const std::filesystem::path& path, const std::string& household_id) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());

    std::string line;
    size_t line_no = 1;
    if (!std::getline(in, line)) throw ParseError("empty file", 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "timestamp,watts,occupancy")
        throw ParseError("expected header \"timestamp,watts,occupancy\"", 1);

    LoadProfile profile;
    profile.household_id = household_id.empty() ? path.stem().string() : household_id;

    int64_t prev_ts = 0;
    int64_t spacing = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        size_t c1 = line.find(',');
        size_t c2 = (c1 == std::string::npos) ? std::string::npos : line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos)
            throw ParseError("expected 3 comma-separated fields", line_no);

        int64_t ts = parse_i64(std::string_view(line).substr(0, c1), line_no);
        double watts = parse_f64(std::string_view(line).substr(c1 + 1, c2 - c1 - 1), line_no);
        std::string_view occ_field = std::string_view(line).substr(c2 + 1);
        if (occ_field != "0" && occ_field != "1")
            throw ParseError("occupancy must be 0 or 1, got \"" + std::string(occ_field) + "\"", line_no);

        if (!(watts >= 0.0)) throw std::domain_error("negative watts at line " + std::to_string(line_no));

        if (!profile.readings.empty()) {
            int64_t delta = ts - prev_ts;
            if (profile.readings.size() == 1) {
                if (delta < 1) throw ParseError("timestamps must increase by a uniform positive step", line_no);
                spacing = delta;
            } else if (delta != spacing) {
                throw ParseError("non-uniform timestamp spacing (" + std::to_string(delta) + " vs " +
                                     std::to_string(spacing) + ")",
                                 line_no);
            }
        }
        prev_ts = ts;
        profile.readings.push_back(watts);
        profile.occupancy.push_back(occ_field == "1" ? 1 : 0);
    }
    profile.sampling_period_s = spacing > 0 ? int(spacing) : 1;
    return profile;
}

void export_csv(const LoadProfile& profile, const std::filesystem::path& path, int64_t start_timestamp) {
    profile.validate();
    std::ofstream out(path, std::ios::binary);  // LF line endings on every platform
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "timestamp,watts,occupancy\n";
    char num[64];
    for (size_t i = 0; i < profile.readings.size(); ++i) {
        int64_t ts = start_timestamp + int64_t(i) * profile.sampling_period_s;
        auto [p, ec] = std::to_chars(num, num + sizeof num, profile.readings[i]);
        out << ts << ',' << std::string_view(num, size_t(p - num)) << ',' << int(profile.occupancy[i]) << '\n';
    }
    if (!out) throw std::runtime_error("write failure on " + path.string());
}

}  // namespace amlb::timeseries
