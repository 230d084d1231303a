#include <doctest.h>

#include <cmath>
#include <random>

#include "amlb/defense.hpp"

using namespace amlb;
using namespace amlb::defense;

namespace {

// Small trained surrogate shared across the perturbation tests.
const SurrogateModel& test_surrogate() {
    static const SurrogateModel model = [] {
        timeseries::GeneratorParams p;
        p.seed = 404;
        p.occupancy_segment_mean_s = 900;
        auto history = timeseries::generate_profile(p, 2 * 3600);
        neural::TrainConfig cfg;
        cfg.epochs = 6;
        cfg.seed = 404;
        return train_surrogate(history, 20, cfg);
    }();
    return model;
}

std::vector<double> random_readings(size_t n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, 800.0);
    std::vector<double> r(n);
    for (auto& v : r) v = dist(rng);
    return r;
}

}  // namespace

TEST_CASE("privacy levels map to monotone epsilon and steps") {
    auto off = PrivacyLevel::from(Level::off);
    auto low = PrivacyLevel::from(Level::low);
    auto med = PrivacyLevel::from(Level::medium);
    auto high = PrivacyLevel::from(Level::high);
    CHECK(off.epsilon == 0.0);
    CHECK(off.steps == 0);
    CHECK(low.epsilon == doctest::Approx(0.05));
    CHECK(med.epsilon == doctest::Approx(0.15));
    CHECK(high.epsilon == doctest::Approx(0.30));
    CHECK(low.steps == 5);
    CHECK(med.steps == 10);
    CHECK(high.steps == 20);
    CHECK(off.epsilon < low.epsilon);
    CHECK(low.epsilon < med.epsilon);
    CHECK(med.epsilon < high.epsilon);
    CHECK(PrivacyLevel::parse("medium").level == Level::medium);
    CHECK_THROWS_AS(PrivacyLevel::parse("extreme"), std::invalid_argument);
}

TEST_CASE("zero_sum_project subtracts window means") {
    std::vector<double> a{1.0, 3.0};
    CHECK(zero_sum_project(a, 2) == std::vector<double>{-1.0, 1.0});

    std::vector<double> b{2.0, 4.0, 6.0};
    CHECK(zero_sum_project(b, 3) == std::vector<double>{-2.0, 0.0, 2.0});

    CHECK_THROWS_AS(zero_sum_project(a, 1), std::invalid_argument);
}

TEST_CASE("zero_sum_project drives every complete window sum below 1e-12") {
    auto noise = random_readings(1000, 9);
    for (auto& v : noise) v -= 400.0;
    auto projected = zero_sum_project(noise, 2);
    for (size_t i = 0; i + 2 <= projected.size(); i += 2)
        CHECK(std::abs(projected[i] + projected[i + 1]) < 1e-12);
}

TEST_CASE("zero_sum_project is idempotent and never expands window L2 norms") {
    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int w : {2, 3, 5}) {
        std::vector<double> noise(61);
        for (auto& v : noise) v = dist(rng);
        auto once = zero_sum_project(noise, w);
        auto twice = zero_sum_project(once, w);
        for (size_t i = 0; i < once.size(); ++i) CHECK(std::abs(twice[i] - once[i]) <= 1e-15);

        for (size_t start = 0; start + size_t(w) <= noise.size(); start += size_t(w)) {
            double before = 0, after = 0;
            for (size_t k = start; k < start + size_t(w); ++k) {
                before += noise[k] * noise[k];
                after += once[k] * once[k];
            }
            CHECK(after <= before + 1e-12);
        }
        // residual untouched
        const size_t res_start = noise.size() - noise.size() % size_t(w);
        for (size_t k = res_start; k < noise.size(); ++k) CHECK(once[k] == noise[k]);
    }
}

TEST_CASE("perturb at level off returns the input bit-exactly") {
    const auto& surrogate = test_surrogate();
    auto readings = random_readings(200, 3);
    std::vector<uint8_t> occ(200, 1);
    auto out = perturb(surrogate, readings, occ, PrivacyLevel::from(Level::off), 2);
    CHECK(out.readings == readings);
    for (auto [before, after] : out.per_window_delta) CHECK(before == after);
}

TEST_CASE("perturb leaves all-zero windows unchanged") {
    const auto& surrogate = test_surrogate();
    std::vector<double> readings(40, 0.0);
    std::vector<uint8_t> occ(40, 0);
    auto out = perturb(surrogate, readings, occ, PrivacyLevel::from(Level::high), 2);
    CHECK(out.readings == readings);
}

TEST_CASE("perturb at level high satisfies every stream invariant") {
    const auto& surrogate = test_surrogate();
    timeseries::GeneratorParams p;
    p.seed = 777;
    auto profile = timeseries::generate_profile(p, 3600);
    std::vector<uint8_t>& occ = profile.occupancy;

    const auto level = PrivacyLevel::from(Level::high);
    auto out = perturb(surrogate, profile.readings, occ, level, 2);
    REQUIRE(out.readings.size() == profile.readings.size());

    double mean_power = 0;
    for (double r : profile.readings) mean_power += r;
    mean_power /= double(profile.readings.size());
    const double eps_abs = level.epsilon * mean_power;

    const size_t complete = profile.readings.size() / 2;
    REQUIRE(out.per_window_delta.size() == complete);
    bool any_noise = false;
    for (size_t i = 0; i < complete; ++i) {
        double before = 0, after = 0;
        for (size_t k = 0; k < 2; ++k) {
            const double orig = profile.readings[2 * i + k];
            const double pert = out.readings[2 * i + k];
            CHECK(pert >= 0.0);
            CHECK(std::abs(pert - orig) <= eps_abs);
            if (pert != orig) any_noise = true;
            before += orig;
            after += pert;
        }
        CHECK(std::abs(after - before) <= 1e-9 * std::max(1.0, before));
        CHECK(out.per_window_delta[i].first == doctest::Approx(before));
        CHECK(out.per_window_delta[i].second == doctest::Approx(after));
    }
    CHECK(any_noise);    // the defense actually did something
}

TEST_CASE("perturb preserves the residual tail bit-exactly") {
    const auto& surrogate = test_surrogate();
    auto readings = random_readings(41, 12);
    std::vector<uint8_t> occ(41, 1);
    auto out = perturb(surrogate, readings, occ, PrivacyLevel::from(Level::high), 2);
    REQUIRE(out.readings.size() == 41);
    CHECK(out.readings[40] == readings[40]);
}

TEST_CASE("perturb requires a trained surrogate") {
    SurrogateModel untrained;
    untrained.classifier = neural::make_sequence_classifier(4, 1);
    std::vector<double> readings(20, 100.0);
    std::vector<uint8_t> occ(20, 0);
    CHECK_THROWS_AS(perturb(untrained, readings, occ, PrivacyLevel::from(Level::low), 2), StateError);
}

TEST_CASE("train_surrogate rejects single-class histories and is deterministic") {
    timeseries::LoadProfile flat;
    flat.sampling_period_s = 1;
    flat.readings.assign(600, 100.0);
    flat.occupancy.assign(600, 1);
    neural::TrainConfig cfg;
    cfg.epochs = 2;
    CHECK_THROWS_AS(train_surrogate(flat, 20, cfg), std::invalid_argument);

    timeseries::GeneratorParams p;
    p.seed = 88;
    p.occupancy_segment_mean_s = 600;
    auto history = timeseries::generate_profile(p, 3600);
    cfg.seed = 88;
    auto a = train_surrogate(history, 20, cfg);
    auto b = train_surrogate(history, 20, cfg);
    CHECK(neural::save_weights(a.classifier) == neural::save_weights(b.classifier));
    CHECK(a.trained);
}

TEST_CASE("verify_billing is exact at level off and tight at level high") {
    const auto& surrogate = test_surrogate();
    timeseries::GeneratorParams p;
    p.seed = 31;
    auto profile = timeseries::generate_profile(p, 3600);
    timeseries::Tariff tariff(60, {0.10, 0.25}, 2);

    auto off = perturb(surrogate, profile.readings, profile.occupancy, PrivacyLevel::from(Level::off), 2);
    auto off_check = verify_billing(profile, off, tariff);
    CHECK(off_check.bill_after == off_check.bill_before);
    CHECK(off_check.max_window_delta == 0.0);

    auto high = perturb(surrogate, profile.readings, profile.occupancy, PrivacyLevel::from(Level::high), 2);
    auto high_check = verify_billing(profile, high, tariff);
    CHECK(high_check.bill_rel_delta <= 1e-9);
    CHECK(high_check.max_window_delta <= 1e-9);

    PerturbedStream wrong;
    wrong.readings.assign(10, 1.0);
    CHECK_THROWS_AS(verify_billing(profile, wrong, tariff), std::invalid_argument);
}
