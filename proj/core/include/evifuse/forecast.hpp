#pragma once

// Multi-feature LSTM regressor with an affine output head, trained by full
// batch gradient descent on mean squared error.
//
// Gate order everywhere is (input, forget, cell candidate, output). A stack of
// layers feeds the hidden vector of layer l-1 at step s into layer l at the
// same step; the output head maps the top layer's hidden vector to a scalar.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace evifuse::forecast {

// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

enum Gate : std::size_t { kInputGate = 0, kForgetGate = 1, kCellGate = 2, kOutputGate = 3 };
inline constexpr std::size_t kGateCount = 4;

struct GateParams {
  Matrix input;               // hidden x layer_input
  Matrix recurrent;           // hidden x hidden
  std::vector<double> bias;   // hidden
};

struct LayerParams {
  std::array<GateParams, kGateCount> gates;
};

struct LstmParams {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  std::vector<LayerParams> layers;
  std::vector<double> head_weight;  // hidden
  double head_bias = 0.0;

  // All-zero parameters of the given shape.
  static LstmParams zeros(std::size_t input_size, std::size_t hidden_size,
                          std::size_t num_layers);

  std::size_t num_layers() const { return layers.size(); }
  std::size_t layer_input_size(std::size_t layer) const {
    return layer == 0 ? input_size : hidden_size;
  }

  // Every parameter tensor in a fixed order: per layer, per gate
  // (input weights, recurrent weights, bias); then head weight, head bias.
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;
  std::size_t parameter_count() const;

  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);

  // Throws InputError if shapes are inconsistent or any value is non-finite.
  void validate() const;
};

struct LayerState {
  std::vector<double> hidden;
  std::vector<double> cell;
};

struct LstmState {
  std::vector<LayerState> layers;

  static LstmState zeros(const LstmParams& params);
};

// Gate activations of one cell step, kept for backpropagation.
struct CellStep {
  LayerState state;
  std::array<std::vector<double>, kGateCount> gates;  // post-activation
  std::vector<double> cell_tanh;                       // tanh(c)
};

using Sequence = std::vector<std::vector<double>>;

struct Sample {
  Sequence features;
  double target = 0.0;
};

struct TrainingConfig {
  std::size_t epochs = 1000;
  double learning_rate = 0.3;
  std::size_t hidden_size = 16;
  std::size_t num_layers = 1;
  std::uint64_t seed = 2024;
  // Steps of backpropagation through time; 0 means the full window.
  std::size_t truncation_length = 0;
  // Global gradient-norm clip; 0 disables clipping.
  double clip_norm = 0.0;

  void validate() const;
};

// One step of one layer. `x` is the layer input (features for layer 0, the
// hidden vector of the layer below otherwise).
CellStep cell_forward(const LstmParams& params, std::size_t layer, std::span<const double> x,
                      const LayerState& prev);

struct SequenceOutput {
  std::vector<double> predictions;  // one per step
  LstmState final_state;
};

SequenceOutput forward_sequence(const LstmParams& params, const Sequence& sequence,
                                const LstmState& initial);
SequenceOutput forward_sequence(const LstmParams& params, const Sequence& sequence);

double mse_loss(std::span<const double> predictions, std::span<const double> targets);

// Gradient of mse_loss(forward_sequence(sequence).predictions, targets) with
// respect to every parameter, starting from the zero state. A nonzero
// truncation limits each step's loss to flowing back that many steps.
LstmParams backward(const LstmParams& params, const Sequence& sequence,
                    std::span<const double> targets, std::size_t truncation_length = 0);

// Loss over a sample set: each sample contributes the squared error of the
// prediction at its last step; the result is the mean over samples.
double sample_loss(const LstmParams& params, std::span<const Sample> samples);
LstmParams sample_gradient(const LstmParams& params, std::span<const Sample> samples,
                           std::size_t truncation_length = 0);

// Largest relative deviation between `analytic` and central differences of
// the sequence loss, using denominator max(|analytic|, |numeric|, 1e-8).
double gradient_deviation(const LstmParams& params, const Sequence& sequence,
                          std::span<const double> targets, double eps,
                          const LstmParams& analytic);
// gradient_deviation against backward().
double grad_check(const LstmParams& params, const Sequence& sequence,
                  std::span<const double> targets, double eps);

// Uniform initialization in [-scale, scale] from a seeded 64-bit Mersenne
// Twister, using a portable bits-to-double conversion.
LstmParams init_params(std::size_t input_size, std::size_t hidden_size, std::size_t num_layers,
                       std::uint64_t seed, double scale = 0.08);

struct TrainingRun {
  LstmParams params;
  // Loss before the update of each epoch.
  std::vector<double> epoch_loss;
  // Loss of the returned parameters.
  double final_loss = 0.0;
};

TrainingRun train_detailed(std::span<const Sample> samples, const TrainingConfig& config);
LstmParams train(std::span<const Sample> samples, const TrainingConfig& config);

// Prediction at the last step of each sample's window.
std::vector<double> predict(const LstmParams& params, std::span<const Sample> samples);

// Text checkpoint: a header with dims and training config, free-form
// metadata lines, then every parameter in tensor order, row-major, printed in
// shortest round-trip form.
struct Checkpoint {
  LstmParams params;
  TrainingConfig config;
  std::map<std::string, std::string> metadata;
};

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(std::istream& in);

}  // namespace evifuse::forecast
