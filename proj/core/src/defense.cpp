#include "amlb/defense.hpp"

#include <algorithm>
#include <cmath>

namespace amlb::defense {

PrivacyLevel PrivacyLevel::from(Level level) {
    switch (level) {
        case Level::off: return {Level::off, 0.0, 0};
        case Level::low: return {Level::low, 0.05, 5};
        case Level::medium: return {Level::medium, 0.15, 10};
        case Level::high: return {Level::high, 0.30, 20};
    }
    throw std::invalid_argument("unknown privacy level");
}

PrivacyLevel PrivacyLevel::parse(const std::string& name) {
    if (name == "off") return from(Level::off);
    if (name == "low") return from(Level::low);
    if (name == "medium") return from(Level::medium);
    if (name == "high") return from(Level::high);
    throw std::invalid_argument("unknown privacy level \"" + name + "\"");
}

const char* PrivacyLevel::name() const {
    switch (level) {
        case Level::off: return "off";
        case Level::low: return "low";
        case Level::medium: return "medium";
        case Level::high: return "high";
    }
    return "?";
}

std::vector<double> zero_sum_project(std::span<const double> noise, int window_len) {
    if (window_len < 2) throw std::invalid_argument("billing window must span at least 2 samples");
    std::vector<double> out(noise.begin(), noise.end());
    const size_t w = size_t(window_len);
    const size_t complete = out.size() / w;
    for (size_t i = 0; i < complete; ++i) {
        double* win = out.data() + i * w;
        double mean = 0;
        for (size_t k = 0; k < w; ++k) mean += win[k];
        mean /= double(w);
        for (size_t k = 0; k < w; ++k) win[k] -= mean;
    }
    return out;
}

neural::Sample make_context_sample(std::span<const double> readings, std::span<const uint8_t> occupancy,
                                   size_t start, size_t len) {
    neural::Sample s;
    s.input.assign(readings.begin() + start, readings.begin() + start + len);
    size_t ones = 0;
    for (size_t k = start; k < start + len; ++k) ones += occupancy[k];
    s.label = (2 * ones >= len) ? 1 : 0;
    return s;
}

namespace {

// Projects one window's noise onto {zero sum} ∩ {readings + noise in
// [readings - eps, readings + eps] ∩ [0, inf)} by alternating projections,
// halving on non-convergence. The final operation is always the clamp, so the
// bound and non-negativity invariants hold exactly.
void project_window(std::span<double> noise, std::span<const double> readings, double eps_abs) {
    const size_t w = noise.size();
    double reading_sum = 0;
    for (double r : readings) reading_sum += r;
    const double tol = 0.25e-9 * std::max(1.0, reading_sum);

    if (reading_sum == 0.0) {    // feasible set is {0}
        std::fill(noise.begin(), noise.end(), 0.0);
        return;
    }

    for (int halving = 0; halving < 64; ++halving) {
        for (int round = 0; round < 50; ++round) {
            double mean = 0;
            for (double n : noise) mean += n;
            mean /= double(w);
            for (double& n : noise) n -= mean;
            for (size_t k = 0; k < w; ++k)
                noise[k] = std::clamp(noise[k], -std::min(eps_abs, readings[k]), eps_abs);
            double sum = 0;
            for (double n : noise) sum += n;
            if (std::abs(sum) <= tol) return;
        }
        for (double& n : noise) n *= 0.5;
    }
    std::fill(noise.begin(), noise.end(), 0.0);    // always feasible
}

}  // namespace

PerturbedStream perturb(const SurrogateModel& surrogate, std::span<const double> readings,
                        std::span<const uint8_t> occupancy_hint, const PrivacyLevel& level,
                        int window_len) {
    if (!surrogate.trained) throw StateError("surrogate must be trained before perturbing");
    if (window_len < 2) throw std::invalid_argument("billing window must span at least 2 samples");
    if (readings.size() != occupancy_hint.size())
        throw std::invalid_argument("readings and occupancy hint length mismatch");
    if (surrogate.context_len < window_len || surrogate.context_len % window_len != 0)
        throw std::invalid_argument("surrogate context must be a positive multiple of the billing window");

    PerturbedStream out;
    out.readings.assign(readings.begin(), readings.end());

    const size_t n = readings.size();
    const size_t w = size_t(window_len);
    const size_t complete = n / w;
    out.per_window_delta.reserve(complete);

    double mean_power = 0;
    for (double r : readings) mean_power += r;
    mean_power = n ? mean_power / double(n) : 0.0;
    const double eps_abs = level.epsilon * mean_power;

    if (level.steps > 0 && eps_abs > 0 && complete > 0) {
        const size_t region = complete * w;    // residual excluded
        const size_t ctx = size_t(surrogate.context_len);
        const double alpha = eps_abs / double(level.steps);
        // clamp fractionally inside the bound so rounding in r + noise cannot
        // push |readings' - readings| past epsilon * mean
        const double eps_clamp = eps_abs * (1.0 - 1e-9);
        std::vector<double> chunk, noise, grad;

        for (size_t start = 0; start < region; start += ctx) {
            const size_t len = std::min(ctx, region - start);
            const auto orig = readings.subspan(start, len);
            size_t ones = 0;
            for (size_t k = 0; k < len; ++k) ones += occupancy_hint[start + k];
            const int label = (2 * ones >= len) ? 1 : 0;

            chunk.assign(orig.begin(), orig.end());
            noise.assign(len, 0.0);

            for (int step = 0; step < level.steps; ++step) {
                for (size_t k = 0; k < len; ++k) chunk[k] = orig[k] + noise[k];
                grad = neural::input_gradient(surrogate.classifier, chunk, label);
                double ginf = 0;
                for (double g : grad) ginf = std::max(ginf, std::abs(g));
                if (ginf > 0) {
                    const double scale = alpha / ginf;
                    for (size_t k = 0; k < len; ++k) noise[k] += scale * grad[k];
                }
                for (size_t win = 0; win + w <= len; win += w)
                    project_window(std::span(noise).subspan(win, w), orig.subspan(win, w), eps_clamp);
            }
            for (size_t k = 0; k < len; ++k) out.readings[start + k] = orig[k] + noise[k];
        }
    }

    for (size_t i = 0; i < complete; ++i) {
        double before = 0, after = 0;
        for (size_t k = 0; k < w; ++k) {
            before += readings[i * w + k];
            after += out.readings[i * w + k];
        }
        out.per_window_delta.emplace_back(before, after);
    }
    return out;
}

SurrogateModel train_surrogate(const timeseries::LoadProfile& history, int context_len,
                               const neural::TrainConfig& cfg,
                               const neural::SequenceClassifier* warm_start, int max_windows) {
    history.validate();
    if (context_len < 2) throw std::invalid_argument("context length must be at least 2");

    const size_t n = history.readings.size();
    const size_t ctx = size_t(context_len);
    if (n < ctx) throw std::invalid_argument("history shorter than one context window");

    const size_t total = n / ctx;
    size_t stride = 1;
    if (max_windows > 0 && total > size_t(max_windows)) stride = (total + size_t(max_windows) - 1) / size_t(max_windows);

    std::vector<neural::Sample> dataset;
    dataset.reserve(total / stride + 1);
    bool has0 = false, has1 = false;
    for (size_t win = 0; win < total; win += stride) {
        dataset.push_back(make_context_sample(history.readings, history.occupancy, win * ctx, ctx));
        (dataset.back().label ? has1 : has0) = true;
    }
    if (!has0 || !has1) throw std::invalid_argument("history must contain both occupancy classes");

    double scale = cfg.input_scale;
    if (scale <= 0) {
        double max_w = 0;
        for (double r : history.readings) max_w = std::max(max_w, r);
        scale = max_w > 0 ? 1.0 / max_w : 1.0;
    }

    SurrogateModel model;
    model.context_len = context_len;
    if (warm_start) {
        model.classifier = *warm_start;
        model.classifier.input_scale = scale;
    } else {
        model.classifier = neural::make_sequence_classifier(8, cfg.seed, scale);
    }
    neural::train(model.classifier, dataset, cfg);
    model.trained = true;
    return model;
}

BillingCheck verify_billing(const timeseries::LoadProfile& original, const PerturbedStream& perturbed,
                            const timeseries::Tariff& tariff) {
    if (original.readings.size() != perturbed.readings.size())
        throw std::invalid_argument("original and perturbed stream lengths differ");

    BillingCheck check;
    check.bill_before = timeseries::compute_bill(original, tariff);

    timeseries::LoadProfile after = original;
    after.readings = perturbed.readings;
    check.bill_after = timeseries::compute_bill(after, tariff);
    check.bill_rel_delta =
        std::abs(check.bill_after - check.bill_before) / std::max(1e-12, std::abs(check.bill_before));

    const size_t w = size_t(tariff.window_len_samples);
    const size_t complete = original.readings.size() / w;
    for (size_t i = 0; i < complete; ++i) {
        double before = 0, after_sum = 0;
        for (size_t k = 0; k < w; ++k) {
            before += original.readings[i * w + k];
            after_sum += perturbed.readings[i * w + k];
        }
        double delta = std::abs(after_sum - before) / std::max(1.0, before);
        check.max_window_delta = std::max(check.max_window_delta, delta);
    }
    return check;
}

}  // namespace amlb::defense
