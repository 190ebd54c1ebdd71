#pragma once

#include "moodcast/dataset.hpp"
#include "moodcast/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace moodcast::model {

// Single-layer LSTM regressor with a scalar fully connected head and a ReLU.
// By default the ReLU clamps the head output (predictions are scores, never
// negative); relu_before_head instead rectifies the last hidden state and
// leaves the head linear.
//
// Parameters live in one flat vector so the optimiser and the
// finite-difference tests can treat the model as a plain R^n point. Layout:
// W[i,f,g,o] (hidden x input each), then U[i,f,g,o] (hidden x hidden), then
// b[i,f,g,o] (hidden), then w_out (hidden), then b_out.
struct ModelParams {
    int input_dim = 19;
    int hidden = 4;
    bool relu_before_head = false;
    std::vector<double> flat;

    static ModelParams zeros(int input_dim, int hidden);
    // Uniform +-1/sqrt(hidden) weights, zero gate biases, small positive
    // head bias so the output ReLU passes gradient at the first step.
    static ModelParams init(int input_dim, int hidden, Rng& rng);

    std::size_t size() const { return flat.size(); }

    double* w_in(int gate);   // hidden x input, row-major
    double* w_rec(int gate);  // hidden x hidden
    double* bias(int gate);   // hidden
    double* w_out();          // hidden
    double& b_out();
    const double* w_in(int gate) const;
    const double* w_rec(int gate) const;
    const double* bias(int gate) const;
    const double* w_out() const;
    const double& b_out() const;
};

inline constexpr int kGateInput = 0;
inline constexpr int kGateForget = 1;
inline constexpr int kGateCell = 2;
inline constexpr int kGateOutput = 3;

struct ForwardCache {
    int steps = 0;
    std::vector<double> x;        // steps x input
    std::vector<double> gate[4];  // steps x hidden, post-nonlinearity
    std::vector<double> cell;     // steps x hidden
    std::vector<double> cell_tanh;
    std::vector<double> hidden_state;
    double head_pre = 0.0; // pre-ReLU head value (relu-at-output mode)
    double prediction = 0.0;
};

// seq is row-major steps x input_dim, 1 <= steps. Throws on non-finite input.
double forward(const ModelParams& params, std::span<const double> seq, int steps,
               ForwardCache* cache = nullptr);

// Squared error of a single sample; batch losses are means of these.
double mse(double prediction, double target);

// Exact gradient of mse(forward(seq), target) with respect to every
// parameter, same flat layout as ModelParams. ReLU uses subgradient 0 at 0.
std::vector<double> backward(const ModelParams& params, const ForwardCache& cache, double target);

struct AdamState {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::int64_t step = 0;
    std::vector<double> m; // first moment
    std::vector<double> v; // second moment

    static AdamState make(std::size_t n_params, double lr = 0.001);
};

// Standard bias-corrected update, in place.
void adam_step(ModelParams& params, std::span<const double> grads, AdamState& state);

struct TrainConfig {
    int epochs = 200;
    int batch_size = 16;
    int hidden = 4;
    double lr = 0.001;
    std::uint64_t seed = 1;
    bool prefix_augmentation = true;
    bool relu_before_head = false;
    std::optional<int> patience; // stop after this many epochs without improvement
};

struct TrainResult {
    ModelParams params;
    std::vector<double> epoch_loss;
};

// Deterministic given the seed. Samples must already be imputed and
// normalised. Throws TrainingDiverged when the loss leaves the finite range.
TrainResult train(std::span<const dataset::Sample> samples, const TrainConfig& config);

double predict(const ModelParams& params, const dataset::Sample& sample);

// Text checkpoint with shape header and the training configuration;
// round-trips parameters exactly.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params, const TrainConfig& config);
struct Checkpoint {
    ModelParams params;
    TrainConfig config;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

void write_loss_trace(const std::filesystem::path& path, std::span<const double> epoch_loss);

} // namespace moodcast::model
