#include "amlb/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace amlb::neural {

namespace {

constexpr double kProbFloor = 1e-15;

inline double sigmoid(double z) {
    if (z >= 0) {
        double e = std::exp(-z);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(z);
    return e / (1.0 + e);
}

inline double clamp_prob(double p) { return std::clamp(p, kProbFloor, 1.0 - kProbFloor); }

inline double activate(Activation act, double a) {
    switch (act) {
        case Activation::identity: return a;
        case Activation::relu: return a > 0 ? a : 0.0;
        case Activation::tanh: return std::tanh(a);
        case Activation::sigmoid: return sigmoid(a);
    }
    return a;
}

// derivative w.r.t. preactivation, expressed through the activated value y
inline double activate_grad(Activation act, double a, double y) {
    switch (act) {
        case Activation::identity: return 1.0;
        case Activation::relu: return a > 0 ? 1.0 : 0.0;
        case Activation::tanh: return 1.0 - y * y;
        case Activation::sigmoid: return y * (1.0 - y);
    }
    return 1.0;
}

void fill_uniform(Vec& v, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-0.1, 0.1);
    for (double& x : v) x = dist(rng);
}

void check_label(int label) {
    if (label != 0 && label != 1) throw std::invalid_argument("label must be 0 or 1");
}

template <class F>
void visit_gates(LstmCell& c, F&& f) {
    f(c.input_gate);
    f(c.forget_gate);
    f(c.output_gate);
    f(c.candidate);
}
template <class F>
void visit_gates(const LstmCell& c, F&& f) {
    f(c.input_gate);
    f(c.forget_gate);
    f(c.output_gate);
    f(c.candidate);
}

// Canonical parameter block order shared by the optimizer, the gradient
// checks and the weight codec.
template <class F>
void visit_blocks_impl(SequenceClassifier& m, F&& f) {
    visit_gates(m.cell, [&](LstmGate& g) {
        f(g.w.a);
        f(g.u.a);
        f(g.b);
    });
    f(m.head.weights.a);
    f(m.head.biases);
}
template <class F>
void visit_blocks_impl(const SequenceClassifier& m, F&& f) {
    visit_gates(m.cell, [&](const LstmGate& g) {
        f(g.w.a);
        f(g.u.a);
        f(g.b);
    });
    f(m.head.weights.a);
    f(m.head.biases);
}
template <class F>
void visit_blocks_impl(Mlp& m, F&& f) {
    for (auto& layer : m.layers) {
        f(layer.weights.a);
        f(layer.biases);
    }
}
template <class F>
void visit_blocks_impl(const Mlp& m, F&& f) {
    for (const auto& layer : m.layers) {
        f(layer.weights.a);
        f(layer.biases);
    }
}

template <class M>
size_t count_impl(const M& m) {
    size_t n = 0;
    visit_blocks_impl(m, [&](const Vec& b) { n += b.size(); });
    return n;
}
template <class M>
void to_flat_impl(const M& m, std::span<double> out) {
    size_t pos = 0;
    visit_blocks_impl(m, [&](const Vec& b) {
        std::copy(b.begin(), b.end(), out.begin() + pos);
        pos += b.size();
    });
    if (pos != out.size()) throw std::invalid_argument("flat parameter size mismatch");
}
template <class M>
void from_flat_impl(M& m, std::span<const double> in) {
    size_t pos = 0;
    visit_blocks_impl(m, [&](Vec& b) {
        std::copy(in.begin() + pos, in.begin() + pos + b.size(), b.begin());
        pos += b.size();
    });
    if (pos != in.size()) throw std::invalid_argument("flat parameter size mismatch");
}
template <class M>
void zero_impl(M& m) {
    visit_blocks_impl(m, [](Vec& b) { std::fill(b.begin(), b.end(), 0.0); });
}

}  // namespace

void TrainConfig::validate() const {
    if (learning_rate < 0) throw std::invalid_argument("learning rate must be >= 0");
    if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
}

// ---- construction ----------------------------------------------------------

DenseLayer make_dense(size_t out, size_t in, Activation act, uint64_t seed) {
    std::mt19937_64 rng(seed);
    DenseLayer l;
    l.weights = Mat(out, in);
    l.biases.assign(out, 0.0);
    l.activation = act;
    fill_uniform(l.weights.a, rng);
    fill_uniform(l.biases, rng);
    return l;
}

SequenceClassifier make_sequence_classifier(size_t hidden, uint64_t seed, double input_scale) {
    if (hidden == 0) throw std::invalid_argument("hidden size must be positive");
    if (!(input_scale > 0)) throw std::invalid_argument("input scale must be positive");
    std::mt19937_64 rng(seed);
    SequenceClassifier m;
    m.cell.hidden = hidden;
    m.cell.input = 1;
    visit_gates(m.cell, [&](LstmGate& g) {
        g.w = Mat(hidden, 1);
        g.u = Mat(hidden, hidden);
        g.b.assign(hidden, 0.0);
        fill_uniform(g.w.a, rng);
        fill_uniform(g.u.a, rng);
        fill_uniform(g.b, rng);
    });
    m.head.weights = Mat(1, hidden);
    m.head.biases.assign(1, 0.0);
    m.head.activation = Activation::sigmoid;
    fill_uniform(m.head.weights.a, rng);
    fill_uniform(m.head.biases, rng);
    m.input_scale = input_scale;
    return m;
}

Mlp make_mlp(const std::vector<size_t>& layer_sizes, uint64_t seed) {
    if (layer_sizes.size() < 2) throw std::invalid_argument("mlp needs at least input and output sizes");
    if (layer_sizes.back() != 1) throw std::invalid_argument("mlp must end in a single sigmoid output");
    std::mt19937_64 rng(seed);
    Mlp m;
    for (size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
        DenseLayer l;
        l.weights = Mat(layer_sizes[i + 1], layer_sizes[i]);
        l.biases.assign(layer_sizes[i + 1], 0.0);
        l.activation = (i + 2 == layer_sizes.size()) ? Activation::sigmoid : Activation::relu;
        fill_uniform(l.weights.a, rng);
        fill_uniform(l.biases, rng);
        m.layers.push_back(std::move(l));
    }
    return m;
}

// ---- forward ---------------------------------------------------------------

Vec dense_forward(const DenseLayer& layer, std::span<const double> x) {
    if (x.size() != layer.weights.cols || layer.biases.size() != layer.weights.rows)
        throw std::invalid_argument("dense layer dimension mismatch");
    Vec y(layer.weights.rows);
    for (size_t r = 0; r < layer.weights.rows; ++r) {
        const double* w = layer.weights.a.data() + r * layer.weights.cols;
        double acc = layer.biases[r];
        for (size_t c = 0; c < x.size(); ++c) acc += w[c] * x[c];
        y[r] = activate(layer.activation, acc);
    }
    return y;
}

std::pair<Vec, Vec> lstm_step(const LstmCell& cell, std::span<const double> x,
                              std::span<const double> h, std::span<const double> c) {
    const size_t H = cell.hidden, D = cell.input;
    if (x.size() != D || h.size() != H || c.size() != H)
        throw std::invalid_argument("lstm step dimension mismatch");
    auto preact = [&](const LstmGate& g, size_t j) {
        double acc = g.b[j];
        const double* w = g.w.a.data() + j * D;
        for (size_t k = 0; k < D; ++k) acc += w[k] * x[k];
        const double* u = g.u.a.data() + j * H;
        for (size_t k = 0; k < H; ++k) acc += u[k] * h[k];
        return acc;
    };
    Vec h_next(H), c_next(H);
    for (size_t j = 0; j < H; ++j) {
        double i = sigmoid(preact(cell.input_gate, j));
        double f = sigmoid(preact(cell.forget_gate, j));
        double o = sigmoid(preact(cell.output_gate, j));
        double g = std::tanh(preact(cell.candidate, j));
        c_next[j] = f * c[j] + i * g;
        h_next[j] = o * std::tanh(c_next[j]);
    }
    return {std::move(h_next), std::move(c_next)};
}

namespace {

// Forward pass over a scalar window, keeping everything BPTT needs.
struct LstmTrace {
    size_t T = 0, H = 0;
    Vec i, f, o, g, c, h;    // T*H each
    double z = 0.0;          // head preactivation
    double p_raw = 0.0;      // unclamped sigmoid(z)
};

void run_forward(const SequenceClassifier& m, std::span<const double> window, LstmTrace& tr) {
    if (window.empty()) throw std::invalid_argument("window must be non-empty");
    if (m.cell.input != 1) throw std::invalid_argument("sequence classifier expects scalar inputs");
    if (m.head.weights.rows != 1 || m.head.weights.cols != m.cell.hidden)
        throw std::invalid_argument("head dimensions must match hidden size");

    const size_t T = window.size(), H = m.cell.hidden;
    tr.T = T;
    tr.H = H;
    for (Vec* v : {&tr.i, &tr.f, &tr.o, &tr.g, &tr.c, &tr.h}) v->assign(T * H, 0.0);

    const LstmGate& gi = m.cell.input_gate;
    const LstmGate& gf = m.cell.forget_gate;
    const LstmGate& go = m.cell.output_gate;
    const LstmGate& gc = m.cell.candidate;

    for (size_t t = 0; t < T; ++t) {
        const double x = window[t] * m.input_scale;
        const double* h_prev = t > 0 ? tr.h.data() + (t - 1) * H : nullptr;
        const double* c_prev = t > 0 ? tr.c.data() + (t - 1) * H : nullptr;
        for (size_t j = 0; j < H; ++j) {
            double ai = gi.b[j] + gi.w.a[j] * x;
            double af = gf.b[j] + gf.w.a[j] * x;
            double ao = go.b[j] + go.w.a[j] * x;
            double ag = gc.b[j] + gc.w.a[j] * x;
            if (h_prev) {
                const double* ui = gi.u.a.data() + j * H;
                const double* uf = gf.u.a.data() + j * H;
                const double* uo = go.u.a.data() + j * H;
                const double* ug = gc.u.a.data() + j * H;
                for (size_t k = 0; k < H; ++k) {
                    double hk = h_prev[k];
                    ai += ui[k] * hk;
                    af += uf[k] * hk;
                    ao += uo[k] * hk;
                    ag += ug[k] * hk;
                }
            }
            const size_t idx = t * H + j;
            tr.i[idx] = sigmoid(ai);
            tr.f[idx] = sigmoid(af);
            tr.o[idx] = sigmoid(ao);
            tr.g[idx] = std::tanh(ag);
            tr.c[idx] = tr.f[idx] * (c_prev ? c_prev[j] : 0.0) + tr.i[idx] * tr.g[idx];
            tr.h[idx] = tr.o[idx] * std::tanh(tr.c[idx]);
        }
    }

    double z = m.head.biases[0];
    const double* hw = m.head.weights.a.data();
    const double* h_last = tr.h.data() + (T - 1) * H;
    for (size_t j = 0; j < H; ++j) z += hw[j] * h_last[j];
    tr.z = z;
    tr.p_raw = sigmoid(z);
}

}  // namespace

double classify(const SequenceClassifier& model, std::span<const double> window) {
    thread_local LstmTrace tr;
    run_forward(model, window, tr);
    return clamp_prob(tr.p_raw);
}

double classify(const Mlp& model, std::span<const double> x) {
    if (model.layers.empty()) throw std::invalid_argument("mlp has no layers");
    Vec cur(x.begin(), x.end());
    for (const auto& layer : model.layers) cur = dense_forward(layer, cur);
    if (cur.size() != 1) throw std::invalid_argument("mlp must end in a single output");
    return clamp_prob(cur[0]);
}

double bce_loss(double p, int label) {
    check_label(label);
    p = std::clamp(p, 1e-12, 1.0 - 1e-12);
    return label == 1 ? -std::log(p) : -std::log(1.0 - p);
}

// ---- gradients -------------------------------------------------------------

double backprop(const SequenceClassifier& m, std::span<const double> window, int label,
                SequenceClassifier* grads, Vec* input_grad) {
    check_label(label);
    thread_local LstmTrace tr;
    run_forward(m, window, tr);

    const size_t T = tr.T, H = tr.H;
    const double loss = bce_loss(clamp_prob(tr.p_raw), label);
    const double dz = tr.p_raw - double(label);    // d loss / d head preactivation

    if (!grads && !input_grad) return loss;
    if (input_grad) input_grad->assign(T, 0.0);

    const double* h_last = tr.h.data() + (T - 1) * H;
    Vec dh(H), dc(H, 0.0), dh_next(H, 0.0);
    for (size_t j = 0; j < H; ++j) {
        if (grads) {
            grads->head.weights.a[j] += dz * h_last[j];
        }
        dh[j] = dz * m.head.weights.a[j];
    }
    if (grads) grads->head.biases[0] += dz;

    Vec dai(H), daf(H), dao(H), dag(H);
    const LstmGate& gi = m.cell.input_gate;
    const LstmGate& gf = m.cell.forget_gate;
    const LstmGate& go = m.cell.output_gate;
    const LstmGate& gc = m.cell.candidate;
    LstmGate* grad_gates[4] = {nullptr, nullptr, nullptr, nullptr};
    if (grads) {
        grad_gates[0] = &grads->cell.input_gate;
        grad_gates[1] = &grads->cell.forget_gate;
        grad_gates[2] = &grads->cell.output_gate;
        grad_gates[3] = &grads->cell.candidate;
    }

    for (size_t t = T; t-- > 0;) {
        const size_t base = t * H;
        const double x = window[t] * m.input_scale;
        const double* h_prev = t > 0 ? tr.h.data() + (t - 1) * H : nullptr;
        const double* c_prev = t > 0 ? tr.c.data() + (t - 1) * H : nullptr;

        for (size_t j = 0; j < H; ++j) {
            const size_t idx = base + j;
            const double i = tr.i[idx], f = tr.f[idx], o = tr.o[idx], g = tr.g[idx];
            const double tc = std::tanh(tr.c[idx]);
            const double dcj = dc[j] + dh[j] * o * (1.0 - tc * tc);
            dao[j] = dh[j] * tc * o * (1.0 - o);
            daf[j] = dcj * (c_prev ? c_prev[j] : 0.0) * f * (1.0 - f);
            dai[j] = dcj * g * i * (1.0 - i);
            dag[j] = dcj * i * (1.0 - g * g);
            dc[j] = dcj * f;    // carried to t-1
        }

        const Vec* das[4] = {&dai, &daf, &dao, &dag};
        if (grads) {
            for (int gate = 0; gate < 4; ++gate) {
                LstmGate& gg = *grad_gates[gate];
                const Vec& da = *das[gate];
                for (size_t j = 0; j < H; ++j) {
                    gg.w.a[j] += da[j] * x;
                    gg.b[j] += da[j];
                    if (h_prev) {
                        double* urow = gg.u.a.data() + j * H;
                        const double daj = da[j];
                        for (size_t k = 0; k < H; ++k) urow[k] += daj * h_prev[k];
                    }
                }
            }
        }
        if (input_grad) {
            double dx = 0.0;
            const LstmGate* gates[4] = {&gi, &gf, &go, &gc};
            for (int gate = 0; gate < 4; ++gate) {
                const Vec& da = *das[gate];
                const double* w = gates[gate]->w.a.data();
                for (size_t j = 0; j < H; ++j) dx += w[j] * da[j];
            }
            (*input_grad)[t] = dx * m.input_scale;
        }
        if (t > 0) {
            std::fill(dh_next.begin(), dh_next.end(), 0.0);
            const LstmGate* gates[4] = {&gi, &gf, &go, &gc};
            for (int gate = 0; gate < 4; ++gate) {
                const Vec& da = *das[gate];
                for (size_t j = 0; j < H; ++j) {
                    const double* urow = gates[gate]->u.a.data() + j * H;
                    const double daj = da[j];
                    for (size_t k = 0; k < H; ++k) dh_next[k] += urow[k] * daj;
                }
            }
            dh.swap(dh_next);
        }
    }
    return loss;
}

double backprop(const Mlp& m, std::span<const double> x, int label, Mlp* grads) {
    check_label(label);
    if (m.layers.empty()) throw std::invalid_argument("mlp has no layers");
    if (m.layers.back().weights.rows != 1 || m.layers.back().activation != Activation::sigmoid)
        throw std::invalid_argument("mlp must end in a single sigmoid output");

    const size_t L = m.layers.size();
    std::vector<Vec> acts(L + 1);          // acts[0] = input, acts[l+1] = output of layer l
    std::vector<Vec> preacts(L);
    acts[0].assign(x.begin(), x.end());
    for (size_t l = 0; l < L; ++l) {
        const auto& layer = m.layers[l];
        if (acts[l].size() != layer.weights.cols) throw std::invalid_argument("mlp layer dimension mismatch");
        preacts[l].resize(layer.weights.rows);
        acts[l + 1].resize(layer.weights.rows);
        for (size_t r = 0; r < layer.weights.rows; ++r) {
            const double* w = layer.weights.a.data() + r * layer.weights.cols;
            double acc = layer.biases[r];
            for (size_t c = 0; c < acts[l].size(); ++c) acc += w[c] * acts[l][c];
            preacts[l][r] = acc;
            acts[l + 1][r] = activate(layer.activation, acc);
        }
    }

    const double p_raw = acts[L][0];
    const double loss = bce_loss(clamp_prob(p_raw), label);
    if (!grads) return loss;

    // fused BCE + sigmoid at the output
    Vec delta{p_raw - double(label)};
    for (size_t l = L; l-- > 0;) {
        const auto& layer = m.layers[l];
        auto& glayer = grads->layers[l];
        if (l + 1 < L) {
            for (size_t r = 0; r < delta.size(); ++r)
                delta[r] *= activate_grad(layer.activation, preacts[l][r], acts[l + 1][r]);
        }
        Vec prev_delta(layer.weights.cols, 0.0);
        for (size_t r = 0; r < layer.weights.rows; ++r) {
            const double dr = delta[r];
            glayer.biases[r] += dr;
            double* gw = glayer.weights.a.data() + r * layer.weights.cols;
            const double* w = layer.weights.a.data() + r * layer.weights.cols;
            for (size_t c = 0; c < layer.weights.cols; ++c) {
                gw[c] += dr * acts[l][c];
                prev_delta[c] += dr * w[c];
            }
        }
        delta.swap(prev_delta);
    }
    return loss;
}

SequenceClassifier param_gradients(const SequenceClassifier& model, std::span<const double> window, int label) {
    SequenceClassifier grads = model;
    zero_params(grads);
    backprop(model, window, label, &grads, nullptr);
    return grads;
}

Mlp param_gradients(const Mlp& model, std::span<const double> x, int label) {
    Mlp grads = model;
    zero_params(grads);
    backprop(model, x, label, &grads);
    return grads;
}

Vec input_gradient(const SequenceClassifier& model, std::span<const double> window, int label) {
    Vec g;
    backprop(model, window, label, nullptr, &g);
    return g;
}

// ---- flat parameter order ---------------------------------------------------

size_t param_count(const SequenceClassifier& m) { return count_impl(m); }
size_t param_count(const Mlp& m) { return count_impl(m); }
void copy_params_to(const SequenceClassifier& m, std::span<double> out) { to_flat_impl(m, out); }
void copy_params_to(const Mlp& m, std::span<double> out) { to_flat_impl(m, out); }
void copy_params_from(SequenceClassifier& m, std::span<const double> in) { from_flat_impl(m, in); }
void copy_params_from(Mlp& m, std::span<const double> in) { from_flat_impl(m, in); }
void zero_params(SequenceClassifier& m) { zero_impl(m); }
void zero_params(Mlp& m) { zero_impl(m); }

// ---- training --------------------------------------------------------------

namespace {

template <class Model>
double sample_backprop(const Model& m, const Sample& s, Model* grads);

template <>
double sample_backprop(const SequenceClassifier& m, const Sample& s, SequenceClassifier* grads) {
    return backprop(m, s.input, s.label, grads, nullptr);
}
template <>
double sample_backprop(const Mlp& m, const Sample& s, Mlp* grads) {
    return backprop(m, s.input, s.label, grads);
}

template <class Model>
std::vector<double> train_impl(Model& model, std::span<const Sample> data, const TrainConfig& cfg) {
    cfg.validate();
    if (data.empty()) throw std::invalid_argument("training set must be non-empty");

    const size_t np = param_count(model);
    Vec theta(np), gflat(np), m1(np, 0.0), m2(np, 0.0);
    copy_params_to(model, theta);
    Model grads = model;

    std::mt19937_64 rng(cfg.seed);
    std::vector<size_t> order(data.size());
    std::iota(order.begin(), order.end(), size_t{0});

    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
    uint64_t step = 0;
    std::vector<double> history;
    history.reserve(size_t(cfg.epochs));

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (size_t start = 0; start < data.size(); start += size_t(cfg.batch_size)) {
            const size_t end = std::min(data.size(), start + size_t(cfg.batch_size));
            zero_params(grads);
            for (size_t k = start; k < end; ++k)
                epoch_loss += sample_backprop(model, data[order[k]], &grads);
            copy_params_to(grads, gflat);
            const double inv_batch = 1.0 / double(end - start);
            ++step;
            if (cfg.optimizer == TrainConfig::Optimizer::sgd) {
                for (size_t i = 0; i < np; ++i) theta[i] -= cfg.learning_rate * gflat[i] * inv_batch;
            } else {
                const double bc1 = 1.0 - std::pow(kBeta1, double(step));
                const double bc2 = 1.0 - std::pow(kBeta2, double(step));
                for (size_t i = 0; i < np; ++i) {
                    const double g = gflat[i] * inv_batch;
                    m1[i] = kBeta1 * m1[i] + (1.0 - kBeta1) * g;
                    m2[i] = kBeta2 * m2[i] + (1.0 - kBeta2) * g * g;
                    theta[i] -= cfg.learning_rate * (m1[i] / bc1) / (std::sqrt(m2[i] / bc2) + kEps);
                }
            }
            copy_params_from(model, theta);
        }
        history.push_back(epoch_loss / double(data.size()));
    }
    return history;
}

}  // namespace

std::vector<double> train(SequenceClassifier& model, std::span<const Sample> data, const TrainConfig& cfg) {
    return train_impl(model, data, cfg);
}
std::vector<double> train(Mlp& model, std::span<const Sample> data, const TrainConfig& cfg) {
    return train_impl(model, data, cfg);
}

// ---- serialization ----------------------------------------------------------

namespace {

constexpr uint16_t kFormatVersion = 1;
constexpr uint8_t kKindSequenceClassifier = 1;
constexpr uint8_t kKindMlp = 2;
constexpr uint32_t kMaxDim = 1u << 20;

}  // namespace

Bytes save_weights(const SequenceClassifier& model) {
    ByteWriter w;
    w.raw("AMLB");
    w.u16(kFormatVersion);
    w.u8(kKindSequenceClassifier);
    w.u32(uint32_t(model.cell.hidden));
    w.u32(uint32_t(model.cell.input));
    w.u32(uint32_t(model.head.weights.cols));
    w.u32(uint32_t(model.head.weights.rows));
    visit_blocks_impl(model, [&](const Vec& b) {
        for (double v : b) w.f64(v);
    });
    w.f64(model.input_scale);
    return w.take();
}

Bytes save_weights(const Mlp& model) {
    ByteWriter w;
    w.raw("AMLB");
    w.u16(kFormatVersion);
    w.u8(kKindMlp);
    w.u32(uint32_t(model.layers.size()));
    for (const auto& l : model.layers) {
        w.u32(uint32_t(l.weights.rows));
        w.u32(uint32_t(l.weights.cols));
        w.u8(uint8_t(l.activation));
    }
    visit_blocks_impl(model, [&](const Vec& b) {
        for (double v : b) w.f64(v);
    });
    return w.take();
}

namespace {

uint32_t read_dim(ByteReader& r) {
    uint32_t v = r.u32();
    if (v == 0 || v > kMaxDim) throw CodecError("dimension out of range: " + std::to_string(v));
    return v;
}

void check_param_bytes(const ByteReader& r, uint64_t doubles) {
    if (r.remaining() != doubles * 8) throw CodecError("parameter section has wrong length");
}

}  // namespace

SequenceClassifier load_sequence_classifier(std::span<const uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect("AMLB");
    if (r.u16() != kFormatVersion) throw CodecError("unsupported weight format version");
    if (r.u8() != kKindSequenceClassifier) throw CodecError("not a sequence classifier weight file");
    const uint32_t H = read_dim(r);
    const uint32_t D = read_dim(r);
    const uint32_t head_in = read_dim(r);
    const uint32_t head_out = read_dim(r);
    if (D != 1 || head_in != H || head_out != 1) throw CodecError("inconsistent dimension header");

    const uint64_t n_params = 4ull * (uint64_t(H) * D + uint64_t(H) * H + H) + H + 1;
    check_param_bytes(r, n_params + 1);    // + input_scale

    SequenceClassifier m;
    m.cell.hidden = H;
    m.cell.input = D;
    visit_gates(m.cell, [&](LstmGate& g) {
        g.w = Mat(H, D);
        g.u = Mat(H, H);
        g.b.assign(H, 0.0);
    });
    m.head.weights = Mat(1, H);
    m.head.biases.assign(1, 0.0);
    m.head.activation = Activation::sigmoid;
    visit_blocks_impl(m, [&](Vec& b) {
        for (double& v : b) v = r.f64();
    });
    m.input_scale = r.f64();
    r.expect_end();
    if (!(m.input_scale > 0) || !std::isfinite(m.input_scale)) throw CodecError("invalid input scale");
    return m;
}

Mlp load_mlp(std::span<const uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect("AMLB");
    if (r.u16() != kFormatVersion) throw CodecError("unsupported weight format version");
    if (r.u8() != kKindMlp) throw CodecError("not an mlp weight file");
    const uint32_t layers = r.u32();
    if (layers == 0 || layers > 64) throw CodecError("layer count out of range");

    Mlp m;
    uint64_t n_params = 0;
    for (uint32_t i = 0; i < layers; ++i) {
        const uint32_t rows = read_dim(r);
        const uint32_t cols = read_dim(r);
        const uint8_t act = r.u8();
        if (act > uint8_t(Activation::sigmoid)) throw CodecError("unknown activation code");
        DenseLayer l;
        l.weights = Mat(rows, cols);
        l.biases.assign(rows, 0.0);
        l.activation = Activation(act);
        m.layers.push_back(std::move(l));
        n_params += uint64_t(rows) * cols + rows;
    }
    check_param_bytes(r, n_params);
    visit_blocks_impl(m, [&](Vec& b) {
        for (double& v : b) v = r.f64();
    });
    r.expect_end();
    return m;
}

}  // namespace amlb::neural
