#include "sevot/trainer.hpp"

#include "sevot/labels.hpp"
#include "sevot/sinkhorn.hpp"
#include "sevot/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace sevot {

void SyntheticSceneConfig::validate() const {
  std::vector<std::string> problems;
  if (num_classes < 2) problems.push_back("num_classes must be >= 2");
  if (feature_dim < 1) problems.push_back("feature_dim must be >= 1");
  if (means.rows() != num_classes || means.cols() != feature_dim) {
    problems.push_back("means must be num_classes x feature_dim");
  }
  if (!(noise_scale > 0.0) || !std::isfinite(noise_scale)) {
    problems.push_back("noise_scale must be positive");
  }
  if (static_cast<Index>(frequencies.size()) != num_classes) {
    problems.push_back("need one frequency per class");
  } else {
    double total = 0.0;
    for (double f : frequencies) {
      if (!(f >= 0.0)) problems.push_back("frequencies must be nonnegative");
      total += f;
    }
    if (std::abs(total - 1.0) > 1e-9) problems.push_back("frequencies must sum to 1");
  }
  if (train_pixels < 1 || val_pixels < 1 || test_pixels < 1) {
    problems.push_back("every split needs at least one pixel");
  }
  if (problems.empty()) {
    for (Index a = 0; a < num_classes; ++a) {
      for (Index b = a + 1; b < num_classes; ++b) {
        if (means.row(a) == means.row(b)) {
          problems.push_back("means of classes " + std::to_string(a) + " and " +
                             std::to_string(b) + " coincide");
        }
      }
    }
  }
  if (!problems.empty()) throw ValidationError("invalid scene config", std::move(problems));
}

SyntheticSceneConfig SyntheticSceneConfig::overlapping_three_class(std::uint64_t seed) {
  SyntheticSceneConfig config;
  config.num_classes = 3;
  config.feature_dim = 2;
  config.means.resize(3, 2);
  config.means << -1.0, 0.0,
                   1.0, 0.0,
                   0.0, 0.0;
  config.noise_scale = 1.0;
  config.frequencies = {0.35, 0.35, 0.3};
  config.train_pixels = 2000;
  config.val_pixels = 500;
  config.test_pixels = 4000;
  config.seed = seed;
  return config;
}

std::string to_string(Split split) {
  switch (split) {
    case Split::train:
      return "train";
    case Split::val:
      return "val";
    case Split::test:
      return "test";
  }
  return "train";
}

void PixelDataset::validate() const {
  if (features.rows() == 0) throw ValidationError(to_string(split) + " split is empty");
  if (static_cast<Index>(labels.size()) != features.rows()) {
    throw SizeError(to_string(split) + " split has " + std::to_string(features.rows()) +
                    " feature rows but " + std::to_string(labels.size()) + " labels");
  }
  if (num_classes < 2) throw ValidationError("dataset needs at least 2 classes");
  for (size_t p = 0; p < labels.size(); ++p) {
    if (labels[p] < 0 || labels[p] >= num_classes) {
      throw ValidationError(to_string(split) + " pixel " + std::to_string(p) + " has label " +
                            std::to_string(labels[p]) + " outside [0, " +
                            std::to_string(num_classes) + ")");
    }
  }
  if (!features.allFinite()) throw ValidationError(to_string(split) + " features are not finite");
}

SceneSplits generate_scene(const SyntheticSceneConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::discrete_distribution<int> pick(config.frequencies.begin(), config.frequencies.end());
  std::normal_distribution<double> noise(0.0, config.noise_scale);

  auto draw = [&](Index pixels, Split split) {
    PixelDataset data;
    data.split = split;
    data.num_classes = config.num_classes;
    data.features.resize(pixels, config.feature_dim);
    data.labels.resize(static_cast<size_t>(pixels));
    for (Index p = 0; p < pixels; ++p) {
      const int c = pick(rng);
      data.labels[static_cast<size_t>(p)] = c;
      for (Index k = 0; k < config.feature_dim; ++k) {
        data.features(p, k) = config.means(c, k) + noise(rng);
      }
    }
    return data;
  };
  SceneSplits splits;
  splits.train = draw(config.train_pixels, Split::train);
  splits.val = draw(config.val_pixels, Split::val);
  splits.test = draw(config.test_pixels, Split::test);
  return splits;
}

SoftmaxModel::SoftmaxModel(Index num_classes, Index feature_dim)
    : weights_(Eigen::MatrixXd::Zero(num_classes, feature_dim)),
      bias_(Eigen::VectorXd::Zero(num_classes)) {
  if (num_classes < 2 || feature_dim < 1) {
    throw ValidationError("model needs >= 2 classes and >= 1 feature");
  }
}

SoftmaxModel::SoftmaxModel(Eigen::MatrixXd weights, Eigen::VectorXd bias)
    : weights_(std::move(weights)), bias_(std::move(bias)) {
  if (weights_.rows() < 2 || weights_.cols() < 1) {
    throw ValidationError("model needs >= 2 classes and >= 1 feature");
  }
  if (bias_.size() != weights_.rows()) {
    throw SizeError("bias has " + std::to_string(bias_.size()) + " entries for " +
                    std::to_string(weights_.rows()) + " classes");
  }
  if (!weights_.allFinite() || !bias_.allFinite()) {
    throw ValidationError("model parameters must be finite");
  }
}

SoftmaxModel SoftmaxModel::initialize(Index num_classes, Index feature_dim, std::uint64_t seed,
                                      double scale) {
  SoftmaxModel model(num_classes, feature_dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  for (Index k = 0; k < feature_dim; ++k) {
    for (Index c = 0; c < num_classes; ++c) model.weights_(c, k) = normal(rng);
  }
  return model;
}

void SoftmaxModel::check_dims(const Eigen::MatrixXd& features) const {
  if (features.cols() != feature_dim()) {
    throw SizeError("features have " + std::to_string(features.cols()) +
                    " columns, model expects " + std::to_string(feature_dim()));
  }
}

Eigen::MatrixXd SoftmaxModel::logits(const Eigen::MatrixXd& features) const {
  check_dims(features);
  return (features * weights_.transpose()).rowwise() + bias_.transpose();
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd probs = logits.colwise() - logits.rowwise().maxCoeff();
  probs = probs.array().exp();
  probs.array().colwise() /= probs.rowwise().sum().array();
  return probs;
}

Eigen::MatrixXd SoftmaxModel::forward(const Eigen::MatrixXd& features) const {
  return softmax_rows(logits(features));
}

ProbabilityHistogram<double> SoftmaxModel::forward_one(const Eigen::VectorXd& x) const {
  if (x.size() != feature_dim()) {
    throw SizeError("feature vector has " + std::to_string(x.size()) + " entries, model expects " +
                    std::to_string(feature_dim()));
  }
  const Eigen::VectorXd z = weights_ * x + bias_;
  return ProbabilityHistogram<double>::softmax(z);
}

std::vector<int> SoftmaxModel::predict(const Eigen::MatrixXd& features) const {
  const Eigen::MatrixXd z = logits(features);
  std::vector<int> out(static_cast<size_t>(z.rows()));
  for (Index p = 0; p < z.rows(); ++p) {
    Index best = 0;
    for (Index c = 1; c < z.cols(); ++c) {
      if (z(p, c) > z(p, best)) best = c;
    }
    out[static_cast<size_t>(p)] = static_cast<int>(best);
  }
  return out;
}

LossSpec LossSpec::cross_entropy() { return LossSpec{}; }

LossSpec LossSpec::wasserstein(GroundMatrix<double> d, MetricFn f) {
  LossSpec spec;
  spec.kind = Kind::wasserstein;
  spec.matrix.emplace(std::move(d));
  spec.metric = f;
  return spec;
}

LossSpec LossSpec::l1(double smoothing) {
  LossSpec spec;
  spec.kind = Kind::l1;
  spec.smoothing = smoothing;
  return spec;
}

LossSpec LossSpec::sinkhorn(GroundMatrix<double> d, double epsilon, double smoothing) {
  LossSpec spec;
  spec.kind = Kind::sinkhorn;
  spec.matrix.emplace(std::move(d));
  spec.epsilon = epsilon;
  spec.smoothing = smoothing;
  return spec;
}

std::string LossSpec::name() const {
  switch (kind) {
    case Kind::ce:
      return "ce";
    case Kind::wasserstein:
      return "wasserstein";
    case Kind::l1:
      return "l1";
    case Kind::sinkhorn:
      return "sinkhorn";
  }
  return "ce";
}

GroundMatrix<double> LossSpec::effective_matrix() const {
  if (!matrix) throw ValidationError(name() + " loss needs a ground matrix");
  return apply_metric_fn(*matrix, metric);
}

void LossSpec::check(Index num_classes) const {
  if (kind == Kind::wasserstein || kind == Kind::sinkhorn) {
    if (!matrix) throw ValidationError(name() + " loss needs a ground matrix");
    if (matrix->size() != num_classes) {
      throw SizeError(name() + " loss matrix is " + std::to_string(matrix->size()) + "x" +
                      std::to_string(matrix->size()) + " but the data has " +
                      std::to_string(num_classes) + " classes");
    }
  }
  if (!(smoothing >= 0.0 && smoothing < 1.0)) {
    throw ValidationError("smoothing must lie in [0, 1)");
  }
  if (kind == Kind::sinkhorn && !(epsilon > 0.0)) {
    throw ValidationError("sinkhorn epsilon must be positive");
  }
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("learning rate must be a finite nonnegative number");
  }
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (batch_size < 0) throw ValidationError("batch size must be >= 0");
}

namespace {

// Per-pixel targets for the soft-target losses: row p is the smoothed one-hot.
Eigen::MatrixXd soft_targets(std::span<const int> labels, Index n, double alpha) {
  Eigen::MatrixXd t(static_cast<Index>(labels.size()), n);
  for (size_t p = 0; p < labels.size(); ++p) {
    t.row(static_cast<Index>(p)) =
        smooth_onehot(OneHotTarget(n, labels[p]), alpha).histogram().values().transpose();
  }
  return t;
}

}  // namespace

Objective evaluate_objective(const SoftmaxModel& model, const Eigen::MatrixXd& features,
                             std::span<const int> labels, const LossSpec& spec) {
  const Index pixels = features.rows();
  const Index n = model.num_classes();
  if (static_cast<Index>(labels.size()) != pixels) {
    throw SizeError("objective: " + std::to_string(pixels) + " feature rows but " +
                    std::to_string(labels.size()) + " labels");
  }
  if (pixels == 0) throw ValidationError("objective over an empty batch");
  for (int y : labels) check_index(y, n, "label");
  spec.check(n);

  const Eigen::MatrixXd probs = model.forward(features);
  // Gradient of each pixel's loss w.r.t. its logits.
  Eigen::MatrixXd grad_logits(pixels, n);
  double total = 0.0;

  switch (spec.kind) {
    case LossSpec::Kind::ce: {
      grad_logits = probs;
      for (Index p = 0; p < pixels; ++p) {
        const int y = labels[static_cast<size_t>(p)];
        const double s = probs(p, y);
        total += -std::log(std::clamp(s, kCrossEntropyFloor, 1.0));
        if (s >= kCrossEntropyFloor) {
          grad_logits(p, y) -= 1.0;
        } else {
          grad_logits.row(p).setZero();
        }
      }
      break;
    }
    case LossSpec::Kind::wasserstein: {
      const GroundMatrix<double> d = spec.effective_matrix();
      // Row p of the probability gradient is column D(:, y_p).
      Eigen::MatrixXd cost(pixels, n);
      for (Index p = 0; p < pixels; ++p) {
        cost.row(p) = d.column(labels[static_cast<size_t>(p)]).transpose();
      }
      const Eigen::VectorXd expected = (probs.array() * cost.array()).rowwise().sum();
      total = expected.sum();
      grad_logits = probs.array() * (cost.colwise() - expected).array();
      break;
    }
    case LossSpec::Kind::l1: {
      const Eigen::MatrixXd t = soft_targets(labels, n, spec.smoothing);
      const Eigen::MatrixXd diff = probs - t;
      total = 0.5 * diff.cwiseAbs().sum();
      const Eigen::MatrixXd g = 0.5 * diff.unaryExpr([](double x) {
        return static_cast<double>((x > 0.0) - (x < 0.0));
      });
      const Eigen::VectorXd mean = (probs.array() * g.array()).rowwise().sum();
      grad_logits = probs.array() * (g.colwise() - mean).array();
      break;
    }
    case LossSpec::Kind::sinkhorn: {
      const GroundMatrix<double> d = spec.effective_matrix();
      SinkhornOptions options;
      options.epsilon = spec.epsilon;
      options.max_iter = spec.sinkhorn_max_iter;
      for (Index p = 0; p < pixels; ++p) {
        const auto s = ProbabilityHistogram<double>::normalized(probs.row(p).transpose());
        const auto t = smooth_onehot(OneHotTarget(n, labels[static_cast<size_t>(p)]),
                                     spec.smoothing);
        const SinkhornSolution<double> sol = sinkhorn_solve(s, t.histogram(), d, options);
        total += sol.result.loss;
        grad_logits.row(p) = softmax_backward<double>(s.values(), sol.source_potential).transpose();
      }
      break;
    }
  }

  Objective out;
  const double scale = 1.0 / static_cast<double>(pixels);
  out.loss = total * scale;
  out.grad_weights = scale * (grad_logits.transpose() * features);
  out.grad_bias = scale * grad_logits.colwise().sum().transpose();
  return out;
}

double mean_loss(const SoftmaxModel& model, const PixelDataset& data, const LossSpec& spec) {
  return evaluate_objective(model, data.features, data.labels, spec).loss;
}

EvalReport evaluate_model(const SoftmaxModel& model, const PixelDataset& data,
                          const GroundMatrix<double>& d, const ImportanceGrouping* grouping) {
  const std::vector<int> preds = model.predict(data.features);
  const ConfusionMatrix conf = accumulate_confusion(preds, data.labels, model.num_classes());
  return make_report(conf, d, grouping);
}

TrainResult train(SoftmaxModel model, const PixelDataset& train_set, const PixelDataset& val_set,
                  const TrainConfig& config, const GroundMatrix<double>& eval_matrix) {
  config.validate();
  train_set.validate();
  val_set.validate();
  const Index n = model.num_classes();
  if (train_set.num_classes != n || val_set.num_classes != n) {
    throw SizeError("model has " + std::to_string(n) + " classes but data has " +
                    std::to_string(train_set.num_classes));
  }
  if (eval_matrix.size() != n) throw SizeError("evaluation matrix size does not match classes");
  config.loss.check(n);

  TrainResult result{model, mean_loss(model, train_set, config.loss), {}};
  if (!std::isfinite(result.initial_train_loss)) {
    throw TrainingAbort(0, 0, "non-finite initial loss");
  }

  const Index pixels = train_set.size();
  const bool full_batch = config.batch_size == 0 || config.batch_size >= pixels;
  std::vector<Index> order(static_cast<size_t>(pixels));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(config.seed);

  Eigen::MatrixXd batch_x;
  std::vector<int> batch_y;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    if (!full_batch) std::shuffle(order.begin(), order.end(), rng);
    const Index step = full_batch ? pixels : config.batch_size;
    Index batch = 0;
    for (Index start = 0; start < pixels; start += step, ++batch) {
      Objective obj;
      if (full_batch) {
        obj = evaluate_objective(model, train_set.features, train_set.labels, config.loss);
      } else {
        const Index count = std::min(step, pixels - start);
        batch_x.resize(count, train_set.features.cols());
        batch_y.resize(static_cast<size_t>(count));
        for (Index k = 0; k < count; ++k) {
          const Index row = order[static_cast<size_t>(start + k)];
          batch_x.row(k) = train_set.features.row(row);
          batch_y[static_cast<size_t>(k)] = train_set.labels[static_cast<size_t>(row)];
        }
        obj = evaluate_objective(model, batch_x, batch_y, config.loss);
      }
      if (!std::isfinite(obj.loss) || !obj.grad_weights.allFinite() ||
          !obj.grad_bias.allFinite()) {
        throw TrainingAbort(epoch, batch, "non-finite loss or gradient");
      }
      model.weights() -= config.learning_rate * obj.grad_weights;
      model.bias() -= config.learning_rate * obj.grad_bias;
      if (!model.weights().allFinite() || !model.bias().allFinite()) {
        throw TrainingAbort(epoch, batch, "non-finite parameters");
      }
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = mean_loss(model, train_set, config.loss);
    stats.val_loss = mean_loss(model, val_set, config.loss);
    const EvalReport report = evaluate_model(model, val_set, eval_matrix);
    stats.val_accuracy = report.accuracy;
    stats.val_miou = report.miou;
    stats.val_severity_error = report.severity_error;
    result.stats.push_back(stats);
  }
  result.model = std::move(model);
  return result;
}

GradCheckResult grad_check(const SoftmaxModel& model, const Eigen::MatrixXd& features,
                           std::span<const int> labels, const LossSpec& spec, double h) {
  if (!(h > 0.0)) throw ValidationError("grad_check step must be positive");
  if (spec.kind == LossSpec::Kind::sinkhorn) {
    throw ValidationError("grad_check supports ce, wasserstein and l1 losses");
  }
  const Objective analytic = evaluate_objective(model, features, labels, spec);
  GradCheckResult result;

  auto compare = [&](double a, double fd) {
    ++result.parameters;
    const double err = std::abs(a - fd);
    if (std::abs(fd) < GradCheckResult::kFlatThreshold) {
      result.max_absolute_error = std::max(result.max_absolute_error, err);
    } else {
      result.max_relative_error =
          std::max(result.max_relative_error, err / std::max(std::abs(a), std::abs(fd)));
    }
  };

  SoftmaxModel probe = model;
  for (Index c = 0; c < model.num_classes(); ++c) {
    for (Index k = 0; k < model.feature_dim(); ++k) {
      const double keep = probe.weights()(c, k);
      probe.weights()(c, k) = keep + h;
      const double up = evaluate_objective(probe, features, labels, spec).loss;
      probe.weights()(c, k) = keep - h;
      const double down = evaluate_objective(probe, features, labels, spec).loss;
      probe.weights()(c, k) = keep;
      compare(analytic.grad_weights(c, k), (up - down) / (2.0 * h));
    }
    const double keep = probe.bias()(c);
    probe.bias()(c) = keep + h;
    const double up = evaluate_objective(probe, features, labels, spec).loss;
    probe.bias()(c) = keep - h;
    const double down = evaluate_objective(probe, features, labels, spec).loss;
    probe.bias()(c) = keep;
    compare(analytic.grad_bias(c), (up - down) / (2.0 * h));
  }
  return result;
}

SeverityExperiment SeverityExperiment::standard() {
  const ImportanceGrouping grouping({"road", "building", "person"}, {1, 1, 2},
                                    {{1, 1.0}, {2, 4.0}});
  SeverityExperiment exp{SyntheticSceneConfig::overlapping_three_class(0),
                         build_group_matrix<double>(grouping), {}, {}};
  exp.ce.loss = LossSpec::cross_entropy();
  exp.ce.learning_rate = 0.5;
  exp.ce.epochs = 300;
  exp.wasserstein.loss = LossSpec::wasserstein(exp.matrix);
  exp.wasserstein.learning_rate = 0.5;
  exp.wasserstein.epochs = 300;
  return exp;
}

SeverityTrial SeverityExperiment::run(std::uint64_t seed) const {
  SyntheticSceneConfig cfg = scene;
  cfg.seed = seed;
  const SceneSplits data = generate_scene(cfg);
  const SoftmaxModel init = SoftmaxModel::initialize(cfg.num_classes, cfg.feature_dim, seed);

  TrainConfig ce_cfg = ce;
  TrainConfig w_cfg = wasserstein;
  ce_cfg.seed = seed;
  w_cfg.seed = seed;
  const TrainResult ce_run = train(init, data.train, data.val, ce_cfg, matrix);
  const TrainResult w_run = train(init, data.train, data.val, w_cfg, matrix);

  const EvalReport ce_eval = evaluate_model(ce_run.model, data.test, matrix);
  const EvalReport w_eval = evaluate_model(w_run.model, data.test, matrix);
  return {seed, ce_eval.severity_error, w_eval.severity_error, ce_eval.accuracy, w_eval.accuracy};
}

}  // namespace sevot
