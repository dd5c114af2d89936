#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "actland/geometry.hpp"

namespace actland {

// Layer widths [d_in, w_1, ..., w_N]; every layer but the last ends with ReLU,
// and softmax is applied only inside the loss.
struct MlpSpec {
  std::vector<std::size_t> widths;
  std::uint64_t seed = 0;

  std::size_t depth() const { return widths.empty() ? 0 : widths.size() - 1; }
  void validate() const;
};

struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;  // outputs x inputs, row-major
  std::vector<double> bias;

  std::span<const double> row(std::size_t o) const { return {weights.data() + o * inputs, inputs}; }
  std::span<double> row(std::size_t o) { return {weights.data() + o * inputs, inputs}; }
};

struct MlpParams {
  std::vector<DenseLayer> layers;

  std::vector<std::size_t> widths() const;
  std::size_t depth() const { return layers.size(); }
  std::size_t parameter_count() const;
  // Zero-filled parameters with the same shapes.
  MlpParams zeros_like() const;
  friend bool operator==(const MlpParams& a, const MlpParams& b);
};

MlpParams init_params(const MlpSpec& spec);

// activations[0] is the input batch, activations[i] the output of layer i
// (after ReLU for hidden layers, raw logits for the last).
struct ActivationTrace {
  std::vector<PointCloud> activations;
};

ActivationTrace forward_with_activations(const MlpParams& params, const PointCloud& batch);

// Logits only.
std::vector<double> forward(const MlpParams& params, const PointCloud& batch);

struct LossAndGradients {
  double loss = 0.0;
  MlpParams gradients;
};

// Mean softmax cross-entropy and its gradient.
LossAndGradients loss_and_gradients(const MlpParams& params, const PointCloud& batch,
                                    std::span<const int> labels);

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};
Evaluation evaluate(const MlpParams& params, const PointCloud& batch, std::span<const int> labels);

struct AdamConfig {
  double learning_rate = 0.04;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  MlpParams first_moment;
  MlpParams second_moment;
  std::uint64_t step = 0;

  static AdamState for_params(const MlpParams& params);
};

void adam_step(MlpParams& params, const MlpParams& gradients, AdamState& state,
               const AdamConfig& config);

struct TrainConfig {
  AdamConfig adam;
  std::size_t batch_size = 128;
  std::size_t max_epochs = 2000;
};

struct Snapshot {
  double threshold = 0.0;
  MlpParams params;
  double achieved_accuracy = 0.0;
  std::size_t step_index = 0;  // optimizer steps taken so far
  std::size_t epoch = 0;
};

struct TrainingLogEntry {
  std::size_t epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
};

struct TrainingResult {
  std::vector<Snapshot> snapshots;
  std::vector<TrainingLogEntry> log;
  // Thresholds still unmet when max_epochs ran out; empty on success.
  std::vector<double> unreached;
  MlpParams final_params;

  bool all_reached() const { return unreached.empty(); }
};

// Mini-batch Adam. After every epoch the full training set is scored and a
// snapshot is recorded for each threshold met for the first time. Stops once
// every threshold is met or after max_epochs. The training cloud must carry
// labels. Thresholds must be strictly increasing in (0, 1].
TrainingResult train_with_snapshots(const MlpSpec& spec, const PointCloud& train,
                                    std::span<const double> thresholds, const TrainConfig& config);

// A text line "widths d0 d1 ... dN" then little-endian float64 values in layer
// order: W_1 row-major, b_1, W_2, b_2, ...
void write_params(std::ostream& out, const MlpParams& params);
MlpParams read_params(std::istream& in);

void write_training_log_csv(std::ostream& out, std::span<const TrainingLogEntry> log);

}  // namespace actland
