#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "amlb/bytes.hpp"
#include "amlb/error.hpp"

namespace amlb::neural {

using Vec = std::vector<double>;

// Row-major dense matrix, just enough for this engine.
struct Mat {
    size_t rows = 0, cols = 0;
    Vec a;

    Mat() = default;
    Mat(size_t r, size_t c) : rows(r), cols(c), a(r * c, 0.0) {}
    double& operator()(size_t r, size_t c) { return a[r * cols + c]; }
    double operator()(size_t r, size_t c) const { return a[r * cols + c]; }
};

enum class Activation : uint8_t { identity = 0, relu = 1, tanh = 2, sigmoid = 3 };

struct DenseLayer {
    Mat weights;      // [out x in]
    Vec biases;       // [out]
    Activation activation = Activation::identity;
};

struct LstmGate {
    Mat w;    // [H x D]
    Mat u;    // [H x H]
    Vec b;    // [H]
};

// Gates: input, forget, output plus the candidate transform.
struct LstmCell {
    size_t hidden = 0;
    size_t input = 0;
    LstmGate input_gate, forget_gate, output_gate, candidate;
};

// LSTM over a scalar window followed by a sigmoid head; emits an occupancy
// probability. The input scale is applied to every sample before the cell.
struct SequenceClassifier {
    LstmCell cell;
    DenseLayer head;            // [1 x H], sigmoid
    double input_scale = 1.0;
};

// Dense stack ending in a single sigmoid output.
struct Mlp {
    std::vector<DenseLayer> layers;
};

struct Sample {
    Vec input;
    int label;    // 0 or 1
};

struct TrainConfig {
    double learning_rate = 0.01;
    int epochs = 20;
    int batch_size = 32;
    enum class Optimizer : uint8_t { sgd = 0, adam = 1 } optimizer = Optimizer::adam;
    uint64_t seed = 0;
    double input_scale = 0.0;   // <= 0: callers derive 1 / max training watts

    void validate() const;
};

// ---- construction ----------------------------------------------------------

DenseLayer make_dense(size_t out, size_t in, Activation act, std::uint64_t seed);
SequenceClassifier make_sequence_classifier(size_t hidden, uint64_t seed, double input_scale = 1.0);
Mlp make_mlp(const std::vector<size_t>& layer_sizes, uint64_t seed);

// ---- forward ---------------------------------------------------------------

Vec dense_forward(const DenseLayer& layer, std::span<const double> x);

// Returns (h', c').
std::pair<Vec, Vec> lstm_step(const LstmCell& cell, std::span<const double> x,
                              std::span<const double> h, std::span<const double> c);

double classify(const SequenceClassifier& model, std::span<const double> window);
double classify(const Mlp& model, std::span<const double> x);

double bce_loss(double p, int label);

// ---- gradients -------------------------------------------------------------

// Gradient containers reuse the model types; every field holds d(loss)/d(param).
SequenceClassifier param_gradients(const SequenceClassifier& model, std::span<const double> window, int label);
Mlp param_gradients(const Mlp& model, std::span<const double> x, int label);

// d(loss)/d(window[t]) for each t, in the units of the raw window values.
Vec input_gradient(const SequenceClassifier& model, std::span<const double> window, int label);

// Core backward pass. Adds parameter gradients into *grads when non-null,
// writes the per-sample input gradient when non-null, returns the loss.
double backprop(const SequenceClassifier& model, std::span<const double> window, int label,
                SequenceClassifier* grads, Vec* input_grad);
double backprop(const Mlp& model, std::span<const double> x, int label, Mlp* grads);

// ---- flat parameter order (gates input,forget,output,candidate; W,U,b; head W,b) ----

size_t param_count(const SequenceClassifier& m);
size_t param_count(const Mlp& m);
void copy_params_to(const SequenceClassifier& m, std::span<double> out);
void copy_params_to(const Mlp& m, std::span<double> out);
void copy_params_from(SequenceClassifier& m, std::span<const double> in);
void copy_params_from(Mlp& m, std::span<const double> in);
void zero_params(SequenceClassifier& m);
void zero_params(Mlp& m);

// ---- training --------------------------------------------------------------

// Deterministic for a fixed seed; returns per-epoch mean loss.
std::vector<double> train(SequenceClassifier& model, std::span<const Sample> data, const TrainConfig& cfg);
std::vector<double> train(Mlp& model, std::span<const Sample> data, const TrainConfig& cfg);

// ---- serialization ("AMLB" magic, big-endian, versioned) --------------------

Bytes save_weights(const SequenceClassifier& model);
Bytes save_weights(const Mlp& model);
SequenceClassifier load_sequence_classifier(std::span<const uint8_t> bytes);
Mlp load_mlp(std::span<const uint8_t> bytes);

}  // namespace amlb::neural
