#pragma once

// Desk-scale training harness: Gaussian pixel scenes, a linear softmax
// classifier, and full-batch or minibatch gradient descent under CE or
// Wasserstein-type losses.

#include "sevot/common.hpp"
#include "sevot/ground_metric.hpp"
#include "sevot/histogram.hpp"
#include "sevot/metrics.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sevot {

struct SyntheticSceneConfig {
  Index num_classes = 3;
  Index feature_dim = 2;
  Eigen::MatrixXd means;  // num_classes x feature_dim
  double noise_scale = 1.0;
  std::vector<double> frequencies;
  Index train_pixels = 2000;
  Index val_pixels = 500;
  Index test_pixels = 2000;
  std::uint64_t seed = 0;

  void validate() const;

  // Three unit-variance classes on a line at -1, 0, +1 with frequencies
  // (0.35, 0.35, 0.3); class 2 sits between the other two.
  static SyntheticSceneConfig overlapping_three_class(std::uint64_t seed);
};

enum class Split { train, val, test };

std::string to_string(Split split);

struct PixelDataset {
  Eigen::MatrixXd features;  // pixels x feature_dim
  std::vector<int> labels;
  Index num_classes = 0;
  Split split = Split::train;

  Index size() const { return features.rows(); }
  void validate() const;
};

struct SceneSplits {
  PixelDataset train;
  PixelDataset val;
  PixelDataset test;
};

// Deterministic in config.seed.
SceneSplits generate_scene(const SyntheticSceneConfig& config);

class SoftmaxModel {
 public:
  SoftmaxModel(Index num_classes, Index feature_dim);
  SoftmaxModel(Eigen::MatrixXd weights, Eigen::VectorXd bias);

  // Weights ~ N(0, scale^2) from `seed`, zero bias.
  static SoftmaxModel initialize(Index num_classes, Index feature_dim, std::uint64_t seed,
                                 double scale = 0.01);

  Index num_classes() const { return weights_.rows(); }
  Index feature_dim() const { return weights_.cols(); }
  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::VectorXd& bias() const { return bias_; }
  Eigen::MatrixXd& weights() { return weights_; }
  Eigen::VectorXd& bias() { return bias_; }

  Eigen::MatrixXd logits(const Eigen::MatrixXd& features) const;
  // Row p is the softmax prediction for pixel p.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& features) const;
  ProbabilityHistogram<double> forward_one(const Eigen::VectorXd& x) const;
  std::vector<int> predict(const Eigen::MatrixXd& features) const;

  friend bool operator==(const SoftmaxModel& a, const SoftmaxModel& b) {
    return a.weights_ == b.weights_ && a.bias_ == b.bias_;
  }

 private:
  void check_dims(const Eigen::MatrixXd& features) const;

  Eigen::MatrixXd weights_;
  Eigen::VectorXd bias_;
};

// Row-wise max-shifted softmax.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

struct LossSpec {
  enum class Kind { ce, wasserstein, l1, sinkhorn };

  Kind kind = Kind::ce;
  std::optional<GroundMatrix<double>> matrix;
  MetricFn metric = MetricFn::identity();
  double epsilon = 0.1;
  int sinkhorn_max_iter = 1000;
  // Uniform-mixing weight used to build soft targets for l1 and sinkhorn.
  double smoothing = 0.0;

  static LossSpec cross_entropy();
  static LossSpec wasserstein(GroundMatrix<double> d, MetricFn f = MetricFn::identity());
  static LossSpec l1(double smoothing = 0.0);
  static LossSpec sinkhorn(GroundMatrix<double> d, double epsilon, double smoothing = 0.0);

  std::string name() const;
  // f applied to the base matrix.
  GroundMatrix<double> effective_matrix() const;
  void check(Index num_classes) const;
};

struct TrainConfig {
  LossSpec loss;
  double learning_rate = 0.1;
  int epochs = 200;
  Index batch_size = 0;  // 0 = full batch
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  std::optional<double> val_miou;
  double val_severity_error = 0.0;
};

struct TrainResult {
  SoftmaxModel model;
  double initial_train_loss = 0.0;
  std::vector<EpochStats> stats;
};

// Mean loss over the selected rows and its gradient w.r.t. (weights, bias).
struct Objective {
  double loss = 0.0;
  Eigen::MatrixXd grad_weights;
  Eigen::VectorXd grad_bias;
};

Objective evaluate_objective(const SoftmaxModel& model, const Eigen::MatrixXd& features,
                             std::span<const int> labels, const LossSpec& spec);

double mean_loss(const SoftmaxModel& model, const PixelDataset& data, const LossSpec& spec);

class TrainingAbort : public NumericalError {
 public:
  TrainingAbort(int epoch, Index batch, const std::string& what)
      : NumericalError(what + " at epoch " + std::to_string(epoch) + ", batch " +
                       std::to_string(batch)),
        epoch_(epoch), batch_(batch) {}

  int epoch() const { return epoch_; }
  Index batch() const { return batch_; }

 private:
  int epoch_;
  Index batch_;
};

// Plain gradient descent with a fixed step. `eval_matrix` scores the
// validation severity error. Sinkhorn losses use the dual potential as the
// probability gradient (plan held fixed), which is approximate.
TrainResult train(SoftmaxModel model, const PixelDataset& train_set, const PixelDataset& val_set,
                  const TrainConfig& config, const GroundMatrix<double>& eval_matrix);

struct GradCheckResult {
  // Over parameters whose finite difference has magnitude >= flat_threshold.
  double max_relative_error = 0.0;
  // Over the remaining (locally flat) parameters.
  double max_absolute_error = 0.0;
  Index parameters = 0;

  static constexpr double kFlatThreshold = 1e-8;

  bool passed(double rel_tol = 1e-4, double abs_tol = 1e-8) const {
    return max_relative_error <= rel_tol && max_absolute_error <= abs_tol;
  }
};

// Analytic parameter gradient against central differences with step h.
GradCheckResult grad_check(const SoftmaxModel& model, const Eigen::MatrixXd& features,
                           std::span<const int> labels, const LossSpec& spec, double h = 1e-5);

EvalReport evaluate_model(const SoftmaxModel& model, const PixelDataset& data,
                          const GroundMatrix<double>& d,
                          const ImportanceGrouping* grouping = nullptr);

// One seed of the CE-versus-Wasserstein severity comparison: both models
// share the scene and initialization; severity is scored on the test split.
struct SeverityTrial {
  std::uint64_t seed = 0;
  double ce_severity = 0.0;
  double wasserstein_severity = 0.0;
  double ce_accuracy = 0.0;
  double wasserstein_accuracy = 0.0;

  bool wasserstein_not_worse() const { return wasserstein_severity <= ce_severity; }
};

struct SeverityExperiment {
  SyntheticSceneConfig scene;
  GroundMatrix<double> matrix;
  TrainConfig ce;
  TrainConfig wasserstein;

  // Weights (1, 1, 4) on the overlapping three-class scene.
  static SeverityExperiment standard();

  SeverityTrial run(std::uint64_t seed) const;
};

}  // namespace sevot
