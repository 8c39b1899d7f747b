#include "evifuse/forecast.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "evifuse/errors.hpp"

namespace evifuse::forecast {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw InputError(std::string(what) + " contains a non-finite value");
  }
}

// out += m * v
void gemv_add(const Matrix& m, std::span<const double> v, std::span<double> out) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* row = m.data.data() + r * m.cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < m.cols; ++c) acc += row[c] * v[c];
    out[r] += acc;
  }
}

// out += m^T * v
void gemv_t_add(const Matrix& m, std::span<const double> v, std::span<double> out) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* row = m.data.data() + r * m.cols;
    const double vr = v[r];
    for (std::size_t c = 0; c < m.cols; ++c) out[c] += row[c] * vr;
  }
}

// m += a b^T
void outer_add(Matrix& m, std::span<const double> a, std::span<const double> b) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    double* row = m.data.data() + r * m.cols;
    const double ar = a[r];
    for (std::size_t c = 0; c < m.cols; ++c) row[c] += ar * b[c];
  }
}

// 53 random mantissa bits mapped onto [0, 1).
double unit_from_bits(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameters

LstmParams LstmParams::zeros(std::size_t input_size, std::size_t hidden_size,
                             std::size_t num_layers) {
  if (input_size == 0 || hidden_size == 0 || num_layers == 0) {
    throw InputError("LSTM dimensions must all be at least 1");
  }
  LstmParams p;
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  p.layers.resize(num_layers);
  for (std::size_t l = 0; l < num_layers; ++l) {
    for (auto& gate : p.layers[l].gates) {
      gate.input = Matrix(hidden_size, p.layer_input_size(l));
      gate.recurrent = Matrix(hidden_size, hidden_size);
      gate.bias.assign(hidden_size, 0.0);
    }
  }
  p.head_weight.assign(hidden_size, 0.0);
  return p;
}

std::vector<std::span<double>> LstmParams::tensors() {
  std::vector<std::span<double>> out;
  for (auto& layer : layers) {
    for (auto& gate : layer.gates) {
      out.emplace_back(gate.input.data);
      out.emplace_back(gate.recurrent.data);
      out.emplace_back(gate.bias);
    }
  }
  out.emplace_back(head_weight);
  out.emplace_back(&head_bias, 1);
  return out;
}

std::vector<std::span<const double>> LstmParams::tensors() const {
  std::vector<std::span<const double>> out;
  for (const auto& layer : layers) {
    for (const auto& gate : layer.gates) {
      out.emplace_back(gate.input.data);
      out.emplace_back(gate.recurrent.data);
      out.emplace_back(gate.bias);
    }
  }
  out.emplace_back(head_weight);
  out.emplace_back(&head_bias, 1);
  return out;
}

std::size_t LstmParams::parameter_count() const {
  std::size_t n = 0;
  for (auto t : tensors()) n += t.size();
  return n;
}

std::vector<double> LstmParams::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (auto t : tensors()) out.insert(out.end(), t.begin(), t.end());
  return out;
}

void LstmParams::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw InputError("flat parameter vector has the wrong size");
  std::size_t offset = 0;
  for (auto t : tensors()) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), t.size(), t.begin());
    offset += t.size();
  }
}

void LstmParams::validate() const {
  if (input_size == 0 || hidden_size == 0 || layers.empty()) {
    throw InputError("LSTM dimensions must all be at least 1");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (const auto& gate : layers[l].gates) {
      if (gate.input.rows != hidden_size || gate.input.cols != layer_input_size(l) ||
          gate.input.data.size() != hidden_size * layer_input_size(l) ||
          gate.recurrent.rows != hidden_size || gate.recurrent.cols != hidden_size ||
          gate.recurrent.data.size() != hidden_size * hidden_size ||
          gate.bias.size() != hidden_size) {
        throw InputError("LSTM layer " + std::to_string(l) + " has inconsistent shapes");
      }
    }
  }
  if (head_weight.size() != hidden_size) throw InputError("output head has the wrong width");
  for (auto t : tensors()) require_finite(t, "LSTM parameters");
}

LstmState LstmState::zeros(const LstmParams& params) {
  LstmState s;
  s.layers.assign(params.num_layers(),
                  LayerState{std::vector<double>(params.hidden_size, 0.0),
                             std::vector<double>(params.hidden_size, 0.0)});
  return s;
}

void TrainingConfig::validate() const {
  if (epochs == 0) throw InputError("epochs must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw InputError("learning_rate must be a positive number");
  }
  if (hidden_size == 0) throw InputError("hidden_size must be positive");
  if (num_layers == 0) throw InputError("num_layers must be positive");
  if (clip_norm < 0.0 || !std::isfinite(clip_norm)) throw InputError("clip_norm must be >= 0");
}

// ---------------------------------------------------------------------------
// Forward

CellStep cell_forward(const LstmParams& params, std::size_t layer, std::span<const double> x,
                      const LayerState& prev) {
  if (layer >= params.num_layers()) throw InputError("layer index out of range");
  const std::size_t h = params.hidden_size;
  if (x.size() != params.layer_input_size(layer)) {
    throw InputError("cell input has " + std::to_string(x.size()) + " values, expected " +
                     std::to_string(params.layer_input_size(layer)));
  }
  if (prev.hidden.size() != h || prev.cell.size() != h) {
    throw InputError("previous state does not match hidden_size");
  }
  require_finite(x, "cell input");

  const auto& lp = params.layers[layer];
  CellStep step;
  for (std::size_t g = 0; g < kGateCount; ++g) {
    auto& pre = step.gates[g];
    pre = lp.gates[g].bias;
    gemv_add(lp.gates[g].input, x, pre);
    gemv_add(lp.gates[g].recurrent, prev.hidden, pre);
    for (double& v : pre) v = (g == kCellGate) ? std::tanh(v) : sigmoid(v);
  }
  const auto& in = step.gates[kInputGate];
  const auto& forget = step.gates[kForgetGate];
  const auto& cand = step.gates[kCellGate];
  const auto& out = step.gates[kOutputGate];

  step.state.cell.resize(h);
  step.state.hidden.resize(h);
  step.cell_tanh.resize(h);
  for (std::size_t j = 0; j < h; ++j) {
    step.state.cell[j] = forget[j] * prev.cell[j] + in[j] * cand[j];
    step.cell_tanh[j] = std::tanh(step.state.cell[j]);
    step.state.hidden[j] = out[j] * step.cell_tanh[j];
  }
  return step;
}

namespace {

double head(const LstmParams& params, std::span<const double> hidden) {
  double y = params.head_bias;
  for (std::size_t j = 0; j < hidden.size(); ++j) y += params.head_weight[j] * hidden[j];
  return y;
}

void check_initial(const LstmParams& params, const LstmState& initial) {
  if (initial.layers.size() != params.num_layers()) {
    throw InputError("initial state has the wrong number of layers");
  }
  for (const auto& ls : initial.layers) {
    if (ls.hidden.size() != params.hidden_size || ls.cell.size() != params.hidden_size) {
      throw InputError("initial state does not match hidden_size");
    }
  }
}

// Forward pass that keeps every cell step: cache[t][l].
struct ForwardTrace {
  std::vector<std::vector<CellStep>> steps;
  std::vector<double> predictions;
};

ForwardTrace trace_forward(const LstmParams& params, const Sequence& sequence,
                           const LstmState& initial) {
  if (sequence.empty()) throw InputError("input sequence is empty");
  check_initial(params, initial);
  ForwardTrace trace;
  trace.steps.resize(sequence.size());
  trace.predictions.resize(sequence.size());
  for (std::size_t t = 0; t < sequence.size(); ++t) {
    auto& row = trace.steps[t];
    row.reserve(params.num_layers());
    for (std::size_t l = 0; l < params.num_layers(); ++l) {
      const LayerState& prev = t == 0 ? initial.layers[l] : trace.steps[t - 1][l].state;
      std::span<const double> x = l == 0 ? std::span<const double>(sequence[t])
                                         : std::span<const double>(row[l - 1].state.hidden);
      row.push_back(cell_forward(params, l, x, prev));
    }
    trace.predictions[t] = head(params, row.back().state.hidden);
  }
  return trace;
}

}  // namespace

SequenceOutput forward_sequence(const LstmParams& params, const Sequence& sequence,
                                const LstmState& initial) {
  if (sequence.empty()) throw InputError("input sequence is empty");
  check_initial(params, initial);
  SequenceOutput out;
  out.final_state = initial;
  out.predictions.reserve(sequence.size());
  for (const auto& x : sequence) {
    std::span<const double> input = x;
    for (std::size_t l = 0; l < params.num_layers(); ++l) {
      auto step = cell_forward(params, l, input, out.final_state.layers[l]);
      out.final_state.layers[l] = std::move(step.state);
      input = out.final_state.layers[l].hidden;
    }
    out.predictions.push_back(head(params, out.final_state.layers.back().hidden));
  }
  return out;
}

SequenceOutput forward_sequence(const LstmParams& params, const Sequence& sequence) {
  return forward_sequence(params, sequence, LstmState::zeros(params));
}

double mse_loss(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size()) {
    throw InputError("mse_loss: predictions and targets differ in length");
  }
  if (predictions.empty()) throw InputError("mse_loss: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - targets[i];
    sum += d * d;
  }
  return sum / static_cast<double>(predictions.size());
}

// ---------------------------------------------------------------------------
// Backward

namespace {

// Backpropagates output gradients dy[t] for t in [t_begin, t_end] (inclusive,
// walked downwards) into `grad`. Recurrent gradients entering step t_end from
// the future are zero; nothing flows below t_begin.
void backprop_range(const LstmParams& params, const Sequence& sequence, const LstmState& initial,
                    const ForwardTrace& trace, std::span<const double> dy, std::size_t t_begin,
                    std::size_t t_end, LstmParams& grad) {
  const std::size_t h = params.hidden_size;
  const std::size_t layers = params.num_layers();
  std::vector<std::vector<double>> dh_next(layers, std::vector<double>(h, 0.0));
  std::vector<std::vector<double>> dc_next(layers, std::vector<double>(h, 0.0));
  std::vector<double> dh(h), dc(h), d_from_above(h);
  std::array<std::vector<double>, kGateCount> dpre;
  for (auto& v : dpre) v.assign(h, 0.0);

  for (std::size_t t = t_end + 1; t-- > t_begin;) {
    const auto& row = trace.steps[t];
    const auto& top_hidden = row.back().state.hidden;
    const double dyt = dy[t];
    if (dyt != 0.0) {
      for (std::size_t j = 0; j < h; ++j) grad.head_weight[j] += dyt * top_hidden[j];
      grad.head_bias += dyt;
    }
    for (std::size_t j = 0; j < h; ++j) d_from_above[j] = dyt * params.head_weight[j];

    for (std::size_t l = layers; l-- > 0;) {
      const CellStep& step = row[l];
      const LayerState& prev = t == 0 ? initial.layers[l] : trace.steps[t - 1][l].state;
      std::span<const double> x = l == 0 ? std::span<const double>(sequence[t])
                                         : std::span<const double>(row[l - 1].state.hidden);
      const auto& gi = step.gates[kInputGate];
      const auto& gf = step.gates[kForgetGate];
      const auto& gc = step.gates[kCellGate];
      const auto& go = step.gates[kOutputGate];

      for (std::size_t j = 0; j < h; ++j) {
        dh[j] = d_from_above[j] + dh_next[l][j];
        const double tc = step.cell_tanh[j];
        dc[j] = dh[j] * go[j] * (1.0 - tc * tc) + dc_next[l][j];
        dpre[kOutputGate][j] = dh[j] * tc * go[j] * (1.0 - go[j]);
        dpre[kInputGate][j] = dc[j] * gc[j] * gi[j] * (1.0 - gi[j]);
        dpre[kCellGate][j] = dc[j] * gi[j] * (1.0 - gc[j] * gc[j]);
        dpre[kForgetGate][j] = dc[j] * prev.cell[j] * gf[j] * (1.0 - gf[j]);
        dc_next[l][j] = dc[j] * gf[j];
      }

      auto& lg = grad.layers[l];
      const auto& lp = params.layers[l];
      std::fill(dh_next[l].begin(), dh_next[l].end(), 0.0);
      std::vector<double> dx(params.layer_input_size(l), 0.0);
      for (std::size_t g = 0; g < kGateCount; ++g) {
        outer_add(lg.gates[g].input, dpre[g], x);
        outer_add(lg.gates[g].recurrent, dpre[g], prev.hidden);
        for (std::size_t j = 0; j < h; ++j) lg.gates[g].bias[j] += dpre[g][j];
        gemv_t_add(lp.gates[g].recurrent, dpre[g], dh_next[l]);
        if (l > 0) gemv_t_add(lp.gates[g].input, dpre[g], dx);
      }
      if (l > 0) d_from_above.assign(dx.begin(), dx.end());
    }
  }
}

// Applies per-step output gradients with optional truncation.
void accumulate_gradient(const LstmParams& params, const Sequence& sequence,
                         const ForwardTrace& trace, std::span<const double> dy,
                         std::size_t truncation_length, LstmParams& grad) {
  const LstmState initial = LstmState::zeros(params);
  const std::size_t steps = sequence.size();
  if (truncation_length == 0 || truncation_length >= steps) {
    backprop_range(params, sequence, initial, trace, dy, 0, steps - 1, grad);
    return;
  }
  std::vector<double> single(steps, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    if (dy[t] == 0.0) continue;
    single[t] = dy[t];
    const std::size_t begin = t + 1 >= truncation_length ? t + 1 - truncation_length : 0;
    backprop_range(params, sequence, initial, trace, single, begin, t, grad);
    single[t] = 0.0;
  }
}

void check_gradient_finite(const LstmParams& grad) {
  for (auto t : grad.tensors()) {
    for (double v : t) {
      if (!std::isfinite(v)) throw ComputationError("non-finite value in LSTM gradient");
    }
  }
}

}  // namespace

LstmParams backward(const LstmParams& params, const Sequence& sequence,
                    std::span<const double> targets, std::size_t truncation_length) {
  if (targets.size() != sequence.size()) {
    throw InputError("backward: one target per sequence step is required");
  }
  const auto trace = trace_forward(params, sequence, LstmState::zeros(params));
  const double scale = 2.0 / static_cast<double>(sequence.size());
  std::vector<double> dy(sequence.size());
  for (std::size_t t = 0; t < dy.size(); ++t) {
    dy[t] = scale * (trace.predictions[t] - targets[t]);
  }
  LstmParams grad = LstmParams::zeros(params.input_size, params.hidden_size, params.num_layers());
  accumulate_gradient(params, sequence, trace, dy, truncation_length, grad);
  check_gradient_finite(grad);
  return grad;
}

double sample_loss(const LstmParams& params, std::span<const Sample> samples) {
  if (samples.empty()) throw InputError("sample set is empty");
  const auto preds = predict(params, samples);
  double sum = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double d = preds[i] - samples[i].target;
    sum += d * d;
  }
  return sum / static_cast<double>(samples.size());
}

LstmParams sample_gradient(const LstmParams& params, std::span<const Sample> samples,
                           std::size_t truncation_length) {
  if (samples.empty()) throw InputError("sample set is empty");
  LstmParams grad = LstmParams::zeros(params.input_size, params.hidden_size, params.num_layers());
  const double scale = 2.0 / static_cast<double>(samples.size());
  std::vector<double> dy;
  for (const auto& sample : samples) {
    const auto trace = trace_forward(params, sample.features, LstmState::zeros(params));
    dy.assign(sample.features.size(), 0.0);
    dy.back() = scale * (trace.predictions.back() - sample.target);
    accumulate_gradient(params, sample.features, trace, dy, truncation_length, grad);
  }
  check_gradient_finite(grad);
  return grad;
}

double gradient_deviation(const LstmParams& params, const Sequence& sequence,
                          std::span<const double> targets, double eps,
                          const LstmParams& analytic) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw InputError("grad_check: eps must be positive");
  if (analytic.parameter_count() != params.parameter_count()) {
    throw InputError("grad_check: gradient shape does not match parameters");
  }
  const auto base = params.flatten();
  const auto grad = analytic.flatten();
  auto probe = params;
  auto flat = base;
  double worst = 0.0;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    flat[i] = base[i] + eps;
    probe.assign(flat);
    const double up = mse_loss(forward_sequence(probe, sequence).predictions, targets);
    flat[i] = base[i] - eps;
    probe.assign(flat);
    const double down = mse_loss(forward_sequence(probe, sequence).predictions, targets);
    flat[i] = base[i];

    const double numeric = (up - down) / (2.0 * eps);
    const double denom = std::max({std::abs(grad[i]), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(grad[i] - numeric) / denom);
  }
  return worst;
}

double grad_check(const LstmParams& params, const Sequence& sequence,
                  std::span<const double> targets, double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw InputError("grad_check: eps must be positive");
  return gradient_deviation(params, sequence, targets, eps, backward(params, sequence, targets));
}

// ---------------------------------------------------------------------------
// Training

LstmParams init_params(std::size_t input_size, std::size_t hidden_size, std::size_t num_layers,
                       std::uint64_t seed, double scale) {
  auto params = LstmParams::zeros(input_size, hidden_size, num_layers);
  std::mt19937_64 rng(seed);
  for (auto t : params.tensors()) {
    for (double& v : t) v = scale * (2.0 * unit_from_bits(rng()) - 1.0);
  }
  return params;
}

TrainingRun train_detailed(std::span<const Sample> samples, const TrainingConfig& config) {
  config.validate();
  if (samples.empty()) throw InputError("cannot train on an empty sample set");
  const std::size_t input_size = samples.front().features.front().size();
  for (const auto& s : samples) {
    if (s.features.empty()) throw InputError("sample with an empty feature window");
    for (const auto& x : s.features) {
      if (x.size() != input_size) throw InputError("samples disagree on feature width");
    }
  }

  TrainingRun run;
  run.params = init_params(input_size, config.hidden_size, config.num_layers, config.seed);
  run.epoch_loss.reserve(config.epochs);
  auto flat = run.params.flatten();
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double loss = sample_loss(run.params, samples);
    if (!std::isfinite(loss)) {
      throw ComputationError("training diverged at epoch " + std::to_string(epoch));
    }
    run.epoch_loss.push_back(loss);

    LstmParams grad;
    try {
      grad = sample_gradient(run.params, samples, config.truncation_length);
    } catch (const ComputationError&) {
      throw ComputationError("training diverged at epoch " + std::to_string(epoch));
    }
    auto g = grad.flatten();
    double step = config.learning_rate;
    if (config.clip_norm > 0.0) {
      double norm = 0.0;
      for (double v : g) norm += v * v;
      norm = std::sqrt(norm);
      if (norm > config.clip_norm) step *= config.clip_norm / norm;
    }
    for (std::size_t i = 0; i < flat.size(); ++i) flat[i] -= step * g[i];
    run.params.assign(flat);
  }
  run.final_loss = sample_loss(run.params, samples);
  if (!std::isfinite(run.final_loss)) {
    throw ComputationError("training diverged at epoch " + std::to_string(config.epochs));
  }
  return run;
}

LstmParams train(std::span<const Sample> samples, const TrainingConfig& config) {
  return train_detailed(samples, config).params;
}

std::vector<double> predict(const LstmParams& params, std::span<const Sample> samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    out.push_back(forward_sequence(params, s.features).predictions.back());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr const char* kCheckpointMagic = "evifuse-lstm";
constexpr int kCheckpointVersion = 1;

template <typename T>
T parse_number(const std::string& text, const std::string& key) {
  T value{};
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw InputError("checkpoint: bad value '" + text + "' for " + key);
  }
  return value;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& cp) {
  cp.params.validate();
  const auto& p = cp.params;
  const auto& c = cp.config;
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n'
      << "input_size " << p.input_size << '\n'
      << "hidden_size " << p.hidden_size << '\n'
      << "num_layers " << p.num_layers() << '\n'
      << "epochs " << c.epochs << '\n'
      << "learning_rate " << format_double(c.learning_rate) << '\n'
      << "seed " << c.seed << '\n'
      << "truncation_length " << c.truncation_length << '\n'
      << "clip_norm " << format_double(c.clip_norm) << '\n';
  for (const auto& [key, value] : cp.metadata) {
    if (key.find_first_of(" \n") != std::string::npos || value.find('\n') != std::string::npos) {
      throw InputError("checkpoint metadata must be single-line and key must have no spaces");
    }
    out << "meta " << key << ' ' << value << '\n';
  }
  const auto flat = p.flatten();
  out << "params " << flat.size() << '\n';
  for (double v : flat) out << format_double(v) << '\n';
  if (!out) throw InputError("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kCheckpointMagic) {
    throw InputError("checkpoint: missing evifuse-lstm header");
  }
  if (version != kCheckpointVersion) {
    throw InputError("checkpoint: unsupported version " + std::to_string(version));
  }
  in.ignore(1);

  Checkpoint cp;
  std::size_t input_size = 0, hidden_size = 0, num_layers = 0, count = 0;
  bool have_params = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto space = line.find(' ');
    const std::string key = line.substr(0, space);
    const std::string value = space == std::string::npos ? "" : line.substr(space + 1);
    if (key == "input_size") input_size = parse_number<std::size_t>(value, key);
    else if (key == "hidden_size") hidden_size = parse_number<std::size_t>(value, key);
    else if (key == "num_layers") num_layers = parse_number<std::size_t>(value, key);
    else if (key == "epochs") cp.config.epochs = parse_number<std::size_t>(value, key);
    else if (key == "learning_rate") cp.config.learning_rate = parse_number<double>(value, key);
    else if (key == "seed") cp.config.seed = parse_number<std::uint64_t>(value, key);
    else if (key == "truncation_length") cp.config.truncation_length = parse_number<std::size_t>(value, key);
    else if (key == "clip_norm") cp.config.clip_norm = parse_number<double>(value, key);
    else if (key == "meta") {
      const auto sep = value.find(' ');
      cp.metadata[value.substr(0, sep)] = sep == std::string::npos ? "" : value.substr(sep + 1);
    } else if (key == "params") {
      count = parse_number<std::size_t>(value, key);
      have_params = true;
      break;
    } else {
      throw InputError("checkpoint: unknown key '" + key + "'");
    }
  }
  if (!have_params) throw InputError("checkpoint: missing parameter block");
  cp.params = LstmParams::zeros(input_size, hidden_size, num_layers);
  cp.config.hidden_size = hidden_size;
  cp.config.num_layers = num_layers;
  if (count != cp.params.parameter_count()) {
    throw InputError("checkpoint: parameter count does not match dimensions");
  }
  std::vector<double> flat;
  flat.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw InputError("checkpoint: truncated parameter block");
    flat.push_back(parse_number<double>(line, "parameter"));
  }
  cp.params.assign(flat);
  cp.params.validate();
  return cp;
}

}  // namespace evifuse::forecast
