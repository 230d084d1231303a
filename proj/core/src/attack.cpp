#include "amlb/attack.hpp"

#include <algorithm>
#include <cmath>

namespace amlb::attack {

FeatureVector extract_features(std::span<const double> window, double onoff_threshold_w) {
    if (window.empty()) throw std::invalid_argument("feature window must be non-empty");

    FeatureVector f;
    double sum = 0, min = window[0], max = window[0];
    for (double r : window) {
        sum += r;
        min = std::min(min, r);
        max = std::max(max, r);
    }
    f.mean_w = sum / double(window.size());
    f.min_w = min;
    f.max_w = max;
    f.range_w = max - min;

    double var = 0;
    for (double r : window) var += (r - f.mean_w) * (r - f.mean_w);
    f.std_w = std::sqrt(var / double(window.size()));

    bool prev_on = window[0] > onoff_threshold_w;
    for (size_t i = 1; i < window.size(); ++i) {
        f.sum_abs_diff_w += std::abs(window[i] - window[i - 1]);
        bool on = window[i] > onoff_threshold_w;
        if (on != prev_on) ++f.onoff_events;
        prev_on = on;
    }
    return f;
}

std::vector<double> FeatureScaler::transform(std::span<const double> raw) const {
    if (raw.size() != mean.size()) throw std::invalid_argument("feature count mismatch");
    std::vector<double> out(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) {
        double s = std[i] > 1e-12 ? std[i] : 1.0;
        out[i] = (raw[i] - mean[i]) / s;
    }
    return out;
}

double AttackModel::predict(std::span<const double> window) const {
    if (scaler.mean.empty()) throw StateError("attack model scaler not fitted");
    auto feats = extract_features(window, onoff_threshold_w).to_vec();
    return neural::classify(net, scaler.transform(feats));
}

Metrics Metrics::from_counts(uint64_t tp, uint64_t fp, uint64_t fn, uint64_t tn) {
    Metrics m;
    m.tp = tp;
    m.fp = fp;
    m.fn = fn;
    m.tn = tn;
    const uint64_t total = tp + fp + fn + tn;
    m.accuracy = total ? double(tp + tn) / double(total) : 0.0;
    m.precision = (tp + fp) ? double(tp) / double(tp + fp) : 0.0;
    m.recall = (tp + fn) ? double(tp) / double(tp + fn) : 0.0;
    m.f1 = (m.precision + m.recall) > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

AttackModel train_attacker(const LabeledWindows& training, const neural::TrainConfig& cfg,
                           double onoff_threshold_w) {
    if (training.windows.size() != training.labels.size())
        throw std::invalid_argument("window and label counts differ");
    if (training.windows.empty()) throw std::invalid_argument("training set must be non-empty");
    bool has0 = false, has1 = false;
    for (uint8_t y : training.labels) (y ? has1 : has0) = true;
    if (!has0 || !has1) throw std::invalid_argument("training set must contain both classes");

    AttackModel model;
    model.onoff_threshold_w = onoff_threshold_w;

    std::vector<std::vector<double>> feats;
    feats.reserve(training.windows.size());
    for (const auto& w : training.windows)
        feats.push_back(extract_features(w, onoff_threshold_w).to_vec());

    const size_t nf = FeatureVector::kCount;
    model.scaler.mean.assign(nf, 0.0);
    model.scaler.std.assign(nf, 0.0);
    for (const auto& f : feats)
        for (size_t i = 0; i < nf; ++i) model.scaler.mean[i] += f[i];
    for (size_t i = 0; i < nf; ++i) model.scaler.mean[i] /= double(feats.size());
    for (const auto& f : feats)
        for (size_t i = 0; i < nf; ++i) {
            double d = f[i] - model.scaler.mean[i];
            model.scaler.std[i] += d * d;
        }
    for (size_t i = 0; i < nf; ++i) model.scaler.std[i] = std::sqrt(model.scaler.std[i] / double(feats.size()));

    std::vector<neural::Sample> dataset(feats.size());
    for (size_t i = 0; i < feats.size(); ++i) {
        dataset[i].input = model.scaler.transform(feats[i]);
        dataset[i].label = training.labels[i];
    }

    model.net = neural::make_mlp({nf, 32, 16, 1}, cfg.seed);
    neural::train(model.net, dataset, cfg);
    return model;
}

Metrics evaluate(const AttackModel& model, const LabeledWindows& test, double decision_threshold) {
    if (test.windows.size() != test.labels.size()) throw std::invalid_argument("window and label counts differ");
    if (test.windows.empty()) throw std::invalid_argument("test set must be non-empty");

    uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (size_t i = 0; i < test.windows.size(); ++i) {
        bool predicted = model.predict(test.windows[i]) >= decision_threshold;
        bool actual = test.labels[i] != 0;
        if (predicted && actual) ++tp;
        else if (predicted && !actual) ++fp;
        else if (!predicted && actual) ++fn;
        else ++tn;
    }
    return Metrics::from_counts(tp, fp, fn, tn);
}

namespace {
constexpr uint8_t kKindAttackModel = 3;
}

Bytes save_attack_model(const AttackModel& model) {
    ByteWriter w;
    w.raw("AMLB");
    w.u16(1);
    w.u8(kKindAttackModel);
    w.u32(uint32_t(model.scaler.mean.size()));
    for (double v : model.scaler.mean) w.f64(v);
    for (double v : model.scaler.std) w.f64(v);
    w.f64(model.onoff_threshold_w);
    Bytes net = neural::save_weights(model.net);
    w.u32(uint32_t(net.size()));
    w.raw(net);
    return w.take();
}

AttackModel load_attack_model(std::span<const uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect("AMLB");
    if (r.u16() != 1) throw CodecError("unsupported weight format version");
    if (r.u8() != kKindAttackModel) throw CodecError("not an attack model file");
    const uint32_t nf = r.u32();
    if (nf == 0 || nf > 1024) throw CodecError("feature count out of range");
    AttackModel m;
    m.scaler.mean.resize(nf);
    m.scaler.std.resize(nf);
    for (double& v : m.scaler.mean) v = r.f64();
    for (double& v : m.scaler.std) v = r.f64();
    m.onoff_threshold_w = r.f64();
    const uint32_t net_len = r.u32();
    auto net_bytes = r.take(net_len);
    m.net = neural::load_mlp(net_bytes);
    r.expect_end();
    return m;
}

}  // namespace amlb::attack
