#include "actland/mlp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "actland/error.hpp"
#include "actland/kernels.hpp"
#include "actland/random.hpp"

namespace actland {

void MlpSpec::validate() const {
  if (widths.size() < 2) throw Error(ErrorCode::InvalidInput, "an MLP needs at least two widths");
  for (auto w : widths) {
    if (w == 0) throw Error(ErrorCode::InvalidInput, "layer widths must be positive");
  }
}

std::vector<std::size_t> MlpParams::widths() const {
  std::vector<std::size_t> out;
  if (layers.empty()) return out;
  out.push_back(layers.front().inputs);
  for (const auto& l : layers) out.push_back(l.outputs);
  return out;
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

MlpParams MlpParams::zeros_like() const {
  MlpParams out = *this;
  for (auto& l : out.layers) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  return out;
}

bool operator==(const MlpParams& a, const MlpParams& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    const auto& x = a.layers[i];
    const auto& y = b.layers[i];
    if (x.inputs != y.inputs || x.outputs != y.outputs || x.weights != y.weights ||
        x.bias != y.bias) {
      return false;
    }
  }
  return true;
}

MlpParams init_params(const MlpSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  MlpParams params;
  for (std::size_t i = 1; i < spec.widths.size(); ++i) {
    DenseLayer layer;
    layer.inputs = spec.widths[i - 1];
    layer.outputs = spec.widths[i];
    const double fan_in = static_cast<double>(layer.inputs);
    const double bound = std::sqrt(6.0 / fan_in);
    layer.weights.resize(layer.inputs * layer.outputs);
    for (auto& w : layer.weights) w = rng.uniform(-bound, bound);
    layer.bias.assign(layer.outputs, 0.0);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

namespace {

void check_batch(const MlpParams& params, const PointCloud& batch) {
  if (params.layers.empty()) throw Error(ErrorCode::ShapeMismatch, "network has no layers");
  if (batch.dim() != params.layers.front().inputs) {
    throw Error(ErrorCode::ShapeMismatch, "batch dimension " + std::to_string(batch.dim()) +
                                              " != network input " +
                                              std::to_string(params.layers.front().inputs));
  }
}

// out (rows x layer.outputs) = in (rows x layer.inputs) * W^T + b, then ReLU if asked.
void dense_forward(const DenseLayer& layer, std::span<const double> in, std::size_t rows,
                   std::vector<double>& out, bool relu) {
  out.resize(rows * layer.outputs);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::span<const double> x(in.data() + r * layer.inputs, layer.inputs);
    double* y = out.data() + r * layer.outputs;
    for (std::size_t o = 0; o < layer.outputs; ++o) y[o] = layer.bias[o] + kernels::dot(layer.row(o), x);
    if (relu) kernels::relu(std::span<double>(y, layer.outputs));
  }
}

// Per-layer outputs for a batch; index 0 is the input.
std::vector<std::vector<double>> forward_all(const MlpParams& params, const PointCloud& batch) {
  std::vector<std::vector<double>> acts(params.depth() + 1);
  acts[0] = batch.coords();
  for (std::size_t l = 0; l < params.depth(); ++l) {
    dense_forward(params.layers[l], acts[l], batch.size(), acts[l + 1], l + 1 < params.depth());
  }
  return acts;
}

// Softmax cross-entropy of one row of logits; writes the probabilities.
double softmax_xent(std::span<const double> logits, int label, std::span<double> probs) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    probs[c] = std::exp(logits[c] - peak);
    total += probs[c];
  }
  for (auto& p : probs) p /= total;
  return std::log(total) + peak - logits[static_cast<std::size_t>(label)];
}

void check_labels(std::span<const int> labels, std::size_t rows, std::size_t classes) {
  if (labels.size() != rows) throw Error(ErrorCode::ShapeMismatch, "label count != batch size");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw Error(ErrorCode::ShapeMismatch, "label " + std::to_string(y) + " out of range");
    }
  }
}

}  // namespace

ActivationTrace forward_with_activations(const MlpParams& params, const PointCloud& batch) {
  check_batch(params, batch);
  auto acts = forward_all(params, batch);
  ActivationTrace trace;
  trace.activations.push_back(batch);
  for (std::size_t l = 1; l < acts.size(); ++l) {
    trace.activations.emplace_back(params.layers[l - 1].outputs, std::move(acts[l]), batch.labels());
  }
  return trace;
}

std::vector<double> forward(const MlpParams& params, const PointCloud& batch) {
  check_batch(params, batch);
  return std::move(forward_all(params, batch).back());
}

LossAndGradients loss_and_gradients(const MlpParams& params, const PointCloud& batch,
                                    std::span<const int> labels) {
  check_batch(params, batch);
  const std::size_t rows = batch.size();
  const std::size_t depth = params.depth();
  const std::size_t classes = params.layers.back().outputs;
  check_labels(labels, rows, classes);

  const auto acts = forward_all(params, batch);
  LossAndGradients result{0.0, params.zeros_like()};

  // delta = dLoss/dLogits, averaged over the batch.
  std::vector<double> delta(rows * classes);
  const double inv_rows = 1.0 / static_cast<double>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::span<const double> logits(acts[depth].data() + r * classes, classes);
    const std::span<double> d(delta.data() + r * classes, classes);
    result.loss += softmax_xent(logits, labels[r], d);
    d[static_cast<std::size_t>(labels[r])] -= 1.0;
    kernels::scale(inv_rows, d);
  }
  result.loss *= inv_rows;

  std::vector<double> delta_in;
  for (std::size_t l = depth; l-- > 0;) {
    const DenseLayer& layer = params.layers[l];
    DenseLayer& grad = result.gradients.layers[l];
    const std::vector<double>& input = acts[l];
    const bool propagate = l > 0;
    if (propagate) delta_in.assign(rows * layer.inputs, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::span<const double> x(input.data() + r * layer.inputs, layer.inputs);
      const double* d = delta.data() + r * layer.outputs;
      const std::span<double> dx(propagate ? delta_in.data() + r * layer.inputs : nullptr,
                                 propagate ? layer.inputs : 0);
      for (std::size_t o = 0; o < layer.outputs; ++o) {
        if (d[o] == 0.0) continue;
        kernels::axpy(d[o], x, grad.row(o));
        grad.bias[o] += d[o];
        if (propagate) kernels::axpy(d[o], layer.row(o), dx);
      }
    }
    if (propagate) {
      // Input of layer l is the ReLU output of layer l-1: gate by its sign.
      for (std::size_t k = 0; k < delta_in.size(); ++k) {
        if (!(input[k] > 0.0)) delta_in[k] = 0.0;
      }
      delta.swap(delta_in);
    }
  }
  return result;
}

Evaluation evaluate(const MlpParams& params, const PointCloud& batch, std::span<const int> labels) {
  const auto logits = forward(params, batch);
  const std::size_t classes = params.layers.back().outputs;
  check_labels(labels, batch.size(), classes);
  std::vector<double> probs(classes);
  Evaluation ev;
  std::size_t correct = 0;
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const std::span<const double> row(logits.data() + r * classes, classes);
    ev.loss += softmax_xent(row, labels[r], probs);
    const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    if (best == static_cast<std::size_t>(labels[r])) ++correct;
  }
  ev.loss /= static_cast<double>(batch.size());
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(batch.size());
  return ev;
}

AdamState AdamState::for_params(const MlpParams& params) {
  return {params.zeros_like(), params.zeros_like(), 0};
}

namespace {

void adam_update(std::span<double> p, std::span<const double> g, std::span<double> m,
                 std::span<double> v, const AdamConfig& c, double correction1, double correction2) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
    const double m_hat = m[i] / correction1;
    const double v_hat = v[i] / correction2;
    p[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

}  // namespace

void adam_step(MlpParams& params, const MlpParams& gradients, AdamState& state,
               const AdamConfig& config) {
  if (params.widths() != gradients.widths() || params.widths() != state.first_moment.widths()) {
    throw Error(ErrorCode::ShapeMismatch, "Adam state, gradients and parameters differ in shape");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t l = 0; l < params.depth(); ++l) {
    auto& p = params.layers[l];
    const auto& g = gradients.layers[l];
    auto& m = state.first_moment.layers[l];
    auto& v = state.second_moment.layers[l];
    adam_update(p.weights, g.weights, m.weights, v.weights, config, c1, c2);
    adam_update(p.bias, g.bias, m.bias, v.bias, config, c1, c2);
  }
}

TrainingResult train_with_snapshots(const MlpSpec& spec, const PointCloud& train,
                                    std::span<const double> thresholds, const TrainConfig& config) {
  spec.validate();
  if (thresholds.empty()) throw Error(ErrorCode::InvalidInput, "no accuracy thresholds");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > 0.0 && thresholds[i] <= 1.0) ||
        (i > 0 && !(thresholds[i] > thresholds[i - 1]))) {
      throw Error(ErrorCode::InvalidInput, "thresholds must be strictly increasing in (0, 1]");
    }
  }
  if (!train.has_labels()) throw Error(ErrorCode::InvalidInput, "training data needs labels");
  if (config.batch_size == 0) throw Error(ErrorCode::InvalidInput, "batch size must be positive");

  TrainingResult result;
  MlpParams params = init_params(spec);
  check_batch(params, train);
  AdamState state = AdamState::for_params(params);
  Rng order_rng(mix_seed(spec.seed, 1));

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::size_t> batch_index;
  std::vector<int> batch_labels;
  std::size_t next_threshold = 0;
  std::size_t steps = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs && next_threshold < thresholds.size();
       ++epoch) {
    order_rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      batch_index.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(stop));
      const PointCloud batch = train.subset(batch_index);
      const auto grads = loss_and_gradients(params, batch, batch.labels());
      adam_step(params, grads.gradients, state, config.adam);
      ++steps;
    }
    const Evaluation ev = evaluate(params, train, train.labels());
    result.log.push_back({epoch, ev.loss, ev.accuracy});
    while (next_threshold < thresholds.size() && ev.accuracy >= thresholds[next_threshold]) {
      result.snapshots.push_back({thresholds[next_threshold], params, ev.accuracy, steps, epoch});
      ++next_threshold;
    }
  }
  result.unreached.assign(thresholds.begin() + static_cast<std::ptrdiff_t>(next_threshold),
                          thresholds.end());
  result.final_params = std::move(params);
  return result;
}

namespace {

void put_le(std::ostream& out, double value) {
  const auto bits = std::bit_cast<std::uint64_t>(value);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(bytes, 8);
}

double get_le(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
    throw Error(ErrorCode::TruncatedFile, "weight file ends early");
  }
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_params(std::ostream& out, const MlpParams& params) {
  out << "widths";
  for (auto w : params.widths()) out << ' ' << w;
  out << '\n';
  for (const auto& l : params.layers) {
    for (double w : l.weights) put_le(out, w);
    for (double b : l.bias) put_le(out, b);
  }
}

MlpParams read_params(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::TruncatedFile, "empty weight file");
  std::istringstream header(line);
  std::string tag;
  header >> tag;
  if (tag != "widths") throw Error(ErrorCode::BadMagic, "weight file must start with 'widths'");
  MlpSpec spec;
  std::size_t w;
  while (header >> w) spec.widths.push_back(w);
  spec.validate();
  MlpParams params = init_params(spec);
  for (auto& l : params.layers) {
    for (auto& x : l.weights) x = get_le(in);
    for (auto& x : l.bias) x = get_le(in);
  }
  return params;
}

void write_training_log_csv(std::ostream& out, std::span<const TrainingLogEntry> log) {
  out << "epoch,loss,accuracy\n";
  const auto old_precision = out.precision(17);
  for (const auto& e : log) out << e.epoch << ',' << e.loss << ',' << e.accuracy << '\n';
  out.precision(old_precision);
}

}  // namespace actland
