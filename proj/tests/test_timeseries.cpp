#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "amlb/timeseries.hpp"

using namespace amlb;
using namespace amlb::timeseries;

namespace {

std::filesystem::path temp_csv(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("generate_profile with no event sources is the constant base load") {
    GeneratorParams p;
    p.base_load_w = 100.0;
    p.appliance_pool.clear();
    p.noise_std_w = 0.0;
    auto profile = generate_profile(p, 600);
    REQUIRE(profile.size() == 600);
    for (double r : profile.readings) CHECK(r == 100.0);
}

TEST_CASE("generate_profile is bit-identical for a fixed seed") {
    GeneratorParams p;
    p.seed = 1234;
    auto a = generate_profile(p, 3600);
    auto b = generate_profile(p, 3600);
    CHECK(a.readings == b.readings);
    CHECK(a.occupancy == b.occupancy);
}

TEST_CASE("generate_profile default 24h occupancy fraction is balanced") {
    GeneratorParams p;
    p.seed = 42;
    auto profile = generate_profile(p, 24 * 3600);
    double occupied = 0;
    for (uint8_t o : profile.occupancy) occupied += o;
    const double fraction = occupied / double(profile.size());
    CHECK(fraction >= 0.2);
    CHECK(fraction <= 0.8);
}

TEST_CASE("generate_profile rejects bad arguments") {
    GeneratorParams p;
    CHECK_THROWS_AS(generate_profile(p, 0), std::invalid_argument);
    CHECK_THROWS_AS(generate_profile(p, -5), std::invalid_argument);
    GeneratorParams inverted;
    inverted.occupied_event_rate = 1.0;
    inverted.unoccupied_event_rate = 5.0;
    CHECK_THROWS_AS(generate_profile(inverted, 100), std::invalid_argument);
}

TEST_CASE("generate_profile readings stay non-negative under heavy noise") {
    GeneratorParams p;
    p.base_load_w = 5.0;
    p.noise_std_w = 50.0;
    p.seed = 9;
    auto profile = generate_profile(p, 3600);
    for (double r : profile.readings) CHECK(r >= 0.0);
}

TEST_CASE("window_slices splits complete windows and flags the residual") {
    std::vector<double> ten(10, 1.0);
    auto s = window_slices(ten, 2);
    CHECK(s.windows.size() == 5);
    CHECK_FALSE(s.has_residual());

    std::vector<double> eleven(11, 1.0);
    auto s2 = window_slices(eleven, 2);
    CHECK(s2.windows.size() == 5);
    CHECK(s2.has_residual());
    CHECK(s2.residual.size() == 1);

    std::vector<double> empty;
    auto s3 = window_slices(empty, 2);
    CHECK(s3.windows.empty());
    CHECK_FALSE(s3.has_residual());

    CHECK_THROWS_AS(window_slices(ten, 1), std::invalid_argument);
}

TEST_CASE("window_slices concatenation reconstructs the series exactly") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dist(0, 500);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> readings(rng() % 200);
        for (auto& r : readings) r = dist(rng);
        const int w = 2 + int(rng() % 6);
        auto s = window_slices(readings, w);
        std::vector<double> rebuilt;
        for (auto win : s.windows) rebuilt.insert(rebuilt.end(), win.begin(), win.end());
        rebuilt.insert(rebuilt.end(), s.residual.begin(), s.residual.end());
        CHECK(rebuilt == readings);
    }
}

TEST_CASE("window_energy_wh") {
    std::vector<double> kw{1000.0, 1000.0};
    CHECK(window_energy_wh(kw, 1) == doctest::Approx(2000.0 / 3600.0).epsilon(1e-12));
    CHECK(window_energy_wh({}, 1) == 0.0);
    std::vector<double> one{3600.0};
    CHECK(window_energy_wh(one, 1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("compute_bill flat and multi-rate tariffs") {
    // 10 kWh total at a flat 0.10/kWh
    LoadProfile p;
    p.sampling_period_s = 1;
    p.readings.assign(3600, 10000.0);    // 10 kW for 1 h
    p.occupancy.assign(3600, 0);
    Tariff flat(3600, {0.10}, 2);
    CHECK(compute_bill(p, flat) == doctest::Approx(1.0).epsilon(1e-12));

    LoadProfile zeros = p;
    std::fill(zeros.readings.begin(), zeros.readings.end(), 0.0);
    CHECK(compute_bill(zeros, flat) == 0.0);

    // two intervals of exactly 1 kWh each at rates 0.1 and 0.3
    LoadProfile q;
    q.sampling_period_s = 1;
    q.readings.assign(4, 1.8e6);
    q.occupancy.assign(4, 0);
    Tariff two(2, {0.1, 0.3}, 2);
    CHECK(compute_bill(q, two) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("compute_bill cycles rates over intervals") {
    LoadProfile p;
    p.sampling_period_s = 1;
    p.readings.assign(8, 1.8e6);    // four intervals of 1 kWh at resolution 2
    p.occupancy.assign(8, 0);
    Tariff t(2, {0.1, 0.3}, 2);
    CHECK(compute_bill(p, t) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("flat tariff bill equals whole-series energy times rate") {
    GeneratorParams gp;
    gp.seed = 77;
    auto profile = generate_profile(gp, 7200);
    Tariff flat(1800, {0.25}, 2);
    const double bill = compute_bill(profile, flat);
    const double direct = window_energy_wh(profile.readings, 1) / 1000.0 * 0.25;
    CHECK(bill == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("tariff construction guards") {
    CHECK_THROWS_AS(Tariff(3, {0.1}, 2), std::invalid_argument);    // not a multiple of the window
    CHECK_THROWS_AS(Tariff(4, {}, 2), std::invalid_argument);       // no rates
    CHECK_THROWS_AS(Tariff(0, {0.1}, 2), std::invalid_argument);
    CHECK_THROWS_AS(Tariff(4, {-0.1}, 2), std::invalid_argument);
    CHECK_NOTHROW(Tariff(4, {0.1}, 2));
}

TEST_CASE("csv export then ingest round-trips the profile") {
    GeneratorParams gp;
    gp.seed = 5;
    auto profile = generate_profile(gp, 1800);
    profile.household_id = "rt";
    const auto path = temp_csv("amlb_roundtrip.csv");
    export_csv(profile, path);
    auto back = ingest_csv(path, "rt");
    CHECK(back.readings == profile.readings);
    CHECK(back.occupancy == profile.occupancy);
    CHECK(back.sampling_period_s == profile.sampling_period_s);
    std::filesystem::remove(path);
}

TEST_CASE("csv ingest reports malformed rows with their line number") {
    const auto path = temp_csv("amlb_badrow.csv");
    {
        std::ofstream out(path);
        out << "timestamp,watts,occupancy\n0,100,1\nabc,100,1\n";
    }
    try {
        ingest_csv(path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 3);
    }
    std::filesystem::remove(path);
}

TEST_CASE("csv ingest rejects negative watts with a domain error") {
    const auto path = temp_csv("amlb_negative.csv");
    {
        std::ofstream out(path);
        out << "timestamp,watts,occupancy\n0,100,1\n1,-5,0\n";
    }
    CHECK_THROWS_AS(ingest_csv(path), std::domain_error);
    std::filesystem::remove(path);
}

TEST_CASE("csv ingest rejects non-uniform spacing and bad headers") {
    const auto path = temp_csv("amlb_spacing.csv");
    {
        std::ofstream out(path);
        out << "timestamp,watts,occupancy\n0,100,1\n1,100,1\n3,100,0\n";
    }
    CHECK_THROWS_AS(ingest_csv(path), ParseError);
    {
        std::ofstream out(path);
        out << "time,watts,occ\n0,100,1\n";
    }
    CHECK_THROWS_AS(ingest_csv(path), ParseError);
    {
        std::ofstream out(path);
        out << "timestamp,watts,occupancy\n0,100,2\n";
    }
    CHECK_THROWS_AS(ingest_csv(path), ParseError);
    std::filesystem::remove(path);
}
