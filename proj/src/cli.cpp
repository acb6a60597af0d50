#include "sevot/cli.hpp"

#include "sevot/bench.hpp"
#include "sevot/exact_lp.hpp"
#include "sevot/io.hpp"
#include "sevot/labels.hpp"
#include "sevot/metrics.hpp"
#include "sevot/sinkhorn.hpp"
#include "sevot/trainer.hpp"
#include "sevot/wasserstein.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

namespace sevot::cli {

namespace {

namespace fs = std::filesystem;
using io::json;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  bool quiet = false;
};

std::vector<double> parse_numbers(const std::string& text, const std::string& what) {
  std::vector<double> values;
  std::string token;
  std::istringstream in(text);
  while (std::getline(in, token, ',')) {
    const auto first = token.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    token = token.substr(first, token.find_last_not_of(" \t") - first + 1);
    size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size()) throw ValidationError(what + ": cannot parse '" + token + "'");
    values.push_back(v);
  }
  if (values.empty()) throw ValidationError(what + " is empty");
  return values;
}

// "0..9" (inclusive) or "0,3,7".
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  const auto dots = text.find("..");
  try {
    if (dots != std::string::npos) {
      const std::uint64_t lo = std::stoull(text.substr(0, dots));
      const std::uint64_t hi = std::stoull(text.substr(dots + 2));
      if (hi < lo) throw ValidationError("seed range '" + text + "' is empty");
      for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
      return seeds;
    }
  } catch (const std::logic_error&) {
    throw ValidationError("bad seed range '" + text + "'");
  }
  for (double v : parse_numbers(text, "--seeds")) {
    if (v < 0 || v != std::floor(v)) throw ValidationError("seeds must be nonnegative integers");
    seeds.push_back(static_cast<std::uint64_t>(v));
  }
  return seeds;
}

Vector<double> to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector<double>>(v.data(), static_cast<Index>(v.size()));
}

fs::path output_path(const Globals& g, const std::string& name) {
  const fs::path p(name);
  return p.is_absolute() ? p : fs::path(g.out_dir) / p;
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

// --- build-matrix -----------------------------------------------------------

struct BuildMatrixArgs {
  std::string grouping;
  std::string metric = "identity";
  std::string out = "ground_matrix.json";
};

int cmd_build_matrix(const BuildMatrixArgs& a, const Globals& g, std::ostream& out) {
  const ImportanceGrouping grouping = io::load_grouping(a.grouping);
  const MetricFn f = MetricFn::parse(a.metric);
  const GroundMatrix<double> d = apply_metric_fn(build_group_matrix<double>(grouping), f);
  const MatrixValidation check = validate_matrix(d.entries());
  if (!check.ok()) throw ValidationError("built matrix is invalid", check.describe());
  const fs::path path = output_path(g, a.out);
  io::write_text(path, io::to_json(d).dump(2) + "\n");
  if (!g.quiet) {
    const auto [lo, hi] = d.off_diagonal_range();
    out << "wrote " << path.string() << ": n=" << d.size() << " metric=" << f.to_string()
        << " min_off_diagonal=" << lo << " max_off_diagonal=" << hi << "\n";
  }
  return kOk;
}

// --- loss-eval --------------------------------------------------------------

struct LossEvalArgs {
  std::vector<std::string> probs;
  bool logits = false;
  std::optional<Index> target;
  std::string target_probs;
  double smooth = 0.0;
  std::string matrix;
  std::string grouping;
  std::string metric = "identity";
  std::string loss = "wasserstein";
  double epsilon = 0.1;
  int max_iter = 1000;
  double tol = 1e-6;
  bool oracle = false;
};

int cmd_loss_eval(const LossEvalArgs& a, std::ostream& out) {
  std::vector<ProbabilityHistogram<double>> inputs;
  for (const std::string& text : a.probs) {
    const Vector<double> v = to_vector(parse_numbers(text, "--probs"));
    inputs.push_back(a.logits ? ProbabilityHistogram<double>::softmax(v)
                              : ProbabilityHistogram<double>(v));
  }
  const Index n = inputs.front().size();
  for (const auto& s : inputs) {
    if (s.size() != n) throw SizeError("all --probs histograms must have the same length");
  }

  std::optional<GroundMatrix<double>> base;
  if (!a.matrix.empty()) {
    base.emplace(io::load_ground_matrix(a.matrix));
  } else if (!a.grouping.empty()) {
    base.emplace(build_group_matrix<double>(io::load_grouping(a.grouping)));
  } else {
    base.emplace(zero_one_matrix<double>(n));
  }
  const GroundMatrix<double> d = apply_metric_fn(*base, MetricFn::parse(a.metric));
  if (d.size() != n) {
    throw SizeError("histograms have " + std::to_string(n) + " bins but the matrix is " +
                    std::to_string(d.size()) + "x" + std::to_string(d.size()));
  }

  if (a.target.has_value() == !a.target_probs.empty()) {
    throw ValidationError("give exactly one of --target or --target-probs");
  }
  std::optional<Index> j_star;
  std::optional<ProbabilityHistogram<double>> t;
  if (a.target) {
    const OneHotTarget hard(n, *a.target);
    if (a.smooth > 0.0) {
      t.emplace(smooth_onehot(hard, a.smooth).histogram());
    } else {
      j_star = hard.j_star();
      t.emplace(onehot_to_histogram(hard));
    }
  } else {
    t.emplace(to_vector(parse_numbers(a.target_probs, "--target-probs")));
    if (t->size() != n) throw SizeError("--target-probs length differs from --probs");
  }

  SinkhornOptions sk;
  sk.epsilon = a.epsilon;
  sk.max_iter = a.max_iter;
  sk.tol = a.tol;

  json results = json::array();
  std::vector<double> losses;
  std::vector<double> ces;
  for (const auto& s : inputs) {
    LossResult<double> r;
    if (a.loss == "wasserstein") {
      r = j_star ? onehot_loss(s, *j_star, d) : exact_lp_loss(s, *t, d);
    } else if (a.loss == "exact") {
      r = exact_lp_loss(s, *t, d);
    } else if (a.loss == "sinkhorn") {
      r = sinkhorn_loss(s, *t, d, sk);
    } else if (a.loss == "l1") {
      r = l1_loss(s, *t);
    } else if (a.loss == "ce" || a.loss == "regression") {
      if (!j_star) throw ValidationError(a.loss + " loss needs a one-hot --target");
      r.loss = a.loss == "ce" ? ce_loss(s, *j_star) : regression_baseline_loss(s, *j_star, d);
    } else {
      throw ValidationError("unknown --loss '" + a.loss + "'");
    }
    json entry = io::to_json(r);
    if (j_star) {
      const double ce = ce_loss(s, *j_star);
      entry["ce_loss"] = ce;
      ces.push_back(ce);
    }
    if (a.oracle) {
      const double exact = exact_lp_loss(s, *t, a.loss == "l1" ? apply_metric_fn(d, MetricFn::step())
                                                               : d)
                               .loss;
      entry["oracle_loss"] = exact;
      entry["oracle_gap"] = std::abs(exact - r.loss);
    }
    losses.push_back(r.loss);
    results.push_back(std::move(entry));
  }

  json doc;
  if (results.size() == 1) {
    doc = results.front();
  } else {
    doc["results"] = results;
    std::vector<size_t> order(losses.size());
    for (size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t x, size_t y) { return losses[x] < losses[y]; });
    doc["loss_order"] = order;
    if (!ces.empty()) {
      const auto [lo, hi] = std::minmax_element(ces.begin(), ces.end());
      doc["ce_equal"] = *hi - *lo <= 1e-12;
    }
  }
  doc["loss_kind"] = a.loss;
  out << doc.dump(2) << "\n";
  return kOk;
}

// --- train ------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string warm_start;
  std::string seeds;
};

struct RunSetup {
  std::optional<SyntheticSceneConfig> scene;
  std::optional<SceneSplits> files;
  TrainConfig train;
  std::optional<GroundMatrix<double>> eval_matrix;
  std::optional<ImportanceGrouping> grouping;
  double init_scale = 0.01;
};

RunSetup load_run(const fs::path& path) {
  const json j = io::load_json(path);
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    const fs::path q(p);
    return q.is_absolute() || base.empty() ? q : base / q;
  };
  RunSetup run;
  try {
    if (j.contains("scene")) {
      run.scene = io::scene_from_json(j.at("scene"));
    } else if (j.contains("data")) {
      const json& data = j.at("data");
      SceneSplits splits;
      splits.train = io::dataset_from_json(io::load_json(resolve(data.at("train").get<std::string>())));
      splits.val = io::dataset_from_json(io::load_json(resolve(data.at("val").get<std::string>())));
      splits.test = io::dataset_from_json(io::load_json(resolve(data.at("test").get<std::string>())));
      run.files = std::move(splits);
    } else {
      throw ValidationError("train config needs \"scene\" or \"data\"");
    }
    run.train = io::train_config_from_json(j, base);
    if (j.contains("grouping")) {
      run.grouping = io::load_grouping(resolve(j.at("grouping").get<std::string>()));
    }
    if (j.contains("eval_matrix")) {
      run.eval_matrix = io::load_ground_matrix(resolve(j.at("eval_matrix").get<std::string>()));
    }
    run.init_scale = j.value("init_scale", run.init_scale);
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return run;
}

GroundMatrix<double> evaluation_matrix(const RunSetup& run, Index n) {
  if (run.eval_matrix) return *run.eval_matrix;
  if (run.train.loss.matrix) return *run.train.loss.matrix;
  if (run.grouping) return build_group_matrix<double>(*run.grouping);
  return zero_one_matrix<double>(n);
}

SceneSplits materialize(const RunSetup& run, std::optional<std::uint64_t> seed) {
  if (run.files) return *run.files;
  SyntheticSceneConfig cfg = *run.scene;
  if (seed) cfg.seed = *seed;
  return generate_scene(cfg);
}

int cmd_train(const TrainArgs& a, const Globals& g, std::ostream& out) {
  RunSetup run = load_run(a.config);
  if (g.seed) {
    run.train.seed = *g.seed;
    if (run.scene) run.scene->seed = *g.seed;
  }

  if (!a.seeds.empty()) {
    const std::vector<std::uint64_t> seeds = parse_seeds(a.seeds);
    json trials = json::array();
    int not_worse = 0;
    for (std::uint64_t seed : seeds) {
      const SceneSplits data = materialize(run, seed);
      const Index n = data.train.num_classes;
      const GroundMatrix<double> d = evaluation_matrix(run, n);
      const SoftmaxModel init =
          SoftmaxModel::initialize(n, data.train.features.cols(), seed, run.init_scale);
      TrainConfig cfg = run.train;
      cfg.seed = seed;
      TrainConfig ce_cfg = cfg;
      ce_cfg.loss = LossSpec::cross_entropy();
      const EvalReport ce = evaluate_model(train(init, data.train, data.val, ce_cfg, d).model,
                                           data.test, d);
      const EvalReport other = evaluate_model(train(init, data.train, data.val, cfg, d).model,
                                              data.test, d);
      const bool ok = other.severity_error <= ce.severity_error;
      not_worse += ok ? 1 : 0;
      trials.push_back({{"seed", seed},
                        {"ce_severity", ce.severity_error},
                        {run.train.loss.name() + "_severity", other.severity_error},
                        {"ce_accuracy", ce.accuracy},
                        {run.train.loss.name() + "_accuracy", other.accuracy},
                        {"not_worse_than_ce", ok}});
    }
    json summary{{"loss", run.train.loss.name()},
                 {"trials", trials},
                 {"seeds", seeds.size()},
                 {"not_worse_than_ce", not_worse}};
    io::write_text(output_path(g, "severity_summary.json"), summary.dump(2) + "\n");
    out << summary.dump(2) << "\n";
    return kOk;
  }

  const SceneSplits data = materialize(run, std::nullopt);
  const Index n = data.train.num_classes;
  const Index f = data.train.features.cols();
  SoftmaxModel init = SoftmaxModel::initialize(n, f, run.train.seed, run.init_scale);
  if (!a.warm_start.empty()) {
    init = io::model_from_json(io::load_json(a.warm_start));
    if (init.num_classes() != n || init.feature_dim() != f) {
      throw SizeError("warm-start model shape does not match the data");
    }
  }
  const GroundMatrix<double> d = evaluation_matrix(run, n);
  const TrainResult result = train(init, data.train, data.val, run.train, d);
  const ImportanceGrouping* grouping = run.grouping ? &*run.grouping : nullptr;
  const EvalReport report = evaluate_model(result.model, data.test, d, grouping);

  std::string stats;
  for (const EpochStats& s : result.stats) stats += io::to_json(s).dump() + "\n";
  io::write_text(output_path(g, "stats.jsonl"), stats);
  io::write_text(output_path(g, "model.json"), io::to_json(result.model).dump(2) + "\n");
  json report_doc = io::to_json(report);
  report_doc["loss"] = run.train.loss.name();
  report_doc["initial_train_loss"] = result.initial_train_loss;
  report_doc["final_train_loss"] = result.stats.back().train_loss;
  json report_file = report_doc;
  report_file["generated_at"] = timestamp();
  io::write_text(output_path(g, "report.json"), report_file.dump(2) + "\n");
  io::write_text(output_path(g, "report.txt"), report.to_table());
  out << report_doc.dump(2) << "\n";
  return kOk;
}

// --- evaluate ---------------------------------------------------------------

struct EvaluateArgs {
  std::string model;
  std::string dataset;
  std::string pred_map;
  std::string truth_map;
  std::string matrix;
  std::string grouping;
  bool table = false;
  std::string out;
};

int cmd_evaluate(const EvaluateArgs& a, const Globals& g, std::ostream& out) {
  std::optional<ImportanceGrouping> grouping;
  if (!a.grouping.empty()) grouping.emplace(io::load_grouping(a.grouping));
  std::optional<GroundMatrix<double>> d;
  if (!a.matrix.empty()) d.emplace(io::load_ground_matrix(a.matrix));

  std::optional<ConfusionMatrix> conf;
  std::optional<Index> n;
  if (grouping) n = grouping->num_classes();
  if (d) n = d->size();
  if (!a.model.empty() || !a.dataset.empty()) {
    if (a.model.empty() || a.dataset.empty()) {
      throw ValidationError("--model and --dataset go together");
    }
    const SoftmaxModel model = io::model_from_json(io::load_json(a.model));
    const PixelDataset data = io::dataset_from_json(io::load_json(a.dataset));
    if (data.num_classes != model.num_classes()) {
      throw SizeError("model and dataset disagree on the class count");
    }
    n = model.num_classes();
    conf.emplace(accumulate_confusion(model.predict(data.features), data.labels, *n));
  } else if (!a.pred_map.empty() && !a.truth_map.empty()) {
    if (!n) throw ValidationError("label maps need --matrix or --grouping to fix the class count");
    const SegmentationMap preds = SegmentationMap::load(a.pred_map);
    const SegmentationMap truths = SegmentationMap::load(a.truth_map);
    preds.check_classes(*n);
    conf.emplace(accumulate_confusion(preds, truths, *n));
  } else {
    throw ValidationError("evaluate needs --model/--dataset or --pred-map/--truth-map");
  }

  if (!d) d.emplace(grouping ? build_group_matrix<double>(*grouping) : zero_one_matrix<double>(*n));
  const EvalReport report = make_report(*conf, *d, grouping ? &*grouping : nullptr);
  if (!a.out.empty()) io::write_text(output_path(g, a.out), report.to_json_text() + "\n");
  out << (a.table ? report.to_table() : report.to_json_text() + "\n");
  return kOk;
}

// --- bench ------------------------------------------------------------------

struct BenchArgs {
  std::string sizes = "16,256,4096";
  int repetitions = 5;
  std::string out;
};

int cmd_bench(const BenchArgs& a, const Globals& g, std::ostream& out) {
  BenchOptions options;
  options.sizes.clear();
  for (double v : parse_numbers(a.sizes, "--sizes")) {
    if (v < 2 || v != std::floor(v)) throw ValidationError("bench sizes must be integers >= 2");
    options.sizes.push_back(static_cast<Index>(v));
  }
  if (a.repetitions < 1) throw ValidationError("--repetitions must be >= 1");
  options.repetitions = a.repetitions;
  if (g.seed) options.seed = *g.seed;
  const std::string csv = bench_csv(run_bench(options));
  if (!a.out.empty()) io::write_text(output_path(g, a.out), csv);
  out << csv;
  return kOk;
}

// --- grad-check -------------------------------------------------------------

struct GradCheckArgs {
  std::string loss = "wasserstein";
  Index classes = 5;
  Index features = 3;
  Index pixels = 16;
  double h = 1e-5;
  std::string matrix;
  std::string metric = "identity";
  double smoothing = 0.0;
};

int cmd_grad_check(const GradCheckArgs& a, const Globals& g, std::ostream& out) {
  const std::uint64_t seed = g.seed.value_or(0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> cost(0.5, 3.0);

  Index n = a.classes;
  std::optional<GroundMatrix<double>> d;
  if (!a.matrix.empty()) {
    d.emplace(io::load_ground_matrix(a.matrix));
    n = d->size();
  }
  if (n < 2 || a.features < 1 || a.pixels < 1) {
    throw ValidationError("grad-check needs >= 2 classes, >= 1 feature, >= 1 pixel");
  }
  if (!d) {
    Matrix<double> entries(n, n);
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < n; ++i) entries(i, j) = i == j ? 0.0 : cost(rng);
    }
    d.emplace(std::move(entries));
  }

  LossSpec spec;
  if (a.loss == "ce") {
    spec = LossSpec::cross_entropy();
  } else if (a.loss == "wasserstein") {
    spec = LossSpec::wasserstein(*d, MetricFn::parse(a.metric));
  } else if (a.loss == "l1") {
    spec = LossSpec::l1(a.smoothing);
  } else {
    throw ValidationError("grad-check supports ce, wasserstein and l1 (got '" + a.loss + "')");
  }

  const SoftmaxModel model = SoftmaxModel::initialize(n, a.features, seed + 1, 1.0);
  Eigen::MatrixXd x(a.pixels, a.features);
  for (Index k = 0; k < a.features; ++k) {
    for (Index p = 0; p < a.pixels; ++p) x(p, k) = normal(rng);
  }
  std::vector<int> labels(static_cast<size_t>(a.pixels));
  for (auto& y : labels) y = static_cast<int>(rng() % static_cast<std::uint64_t>(n));

  const GradCheckResult r = grad_check(model, x, labels, spec, a.h);
  json doc{{"loss", a.loss},
           {"h", a.h},
           {"parameters", r.parameters},
           {"max_relative_error", r.max_relative_error},
           {"max_absolute_error", r.max_absolute_error},
           {"passed", r.passed()}};
  out << doc.dump(2) << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Severity-aware Wasserstein losses: matrices, losses, training, evaluation"};
  app.name(args.empty() ? "sevot" : args.front());
  app.require_subcommand(1);

  Globals globals;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Global random seed");
  app.add_option("--out-dir", globals.out_dir, "Directory for output files");
  app.add_flag("--quiet", globals.quiet, "Suppress human-readable summaries");

  BuildMatrixArgs bm;
  auto* build = app.add_subcommand("build-matrix", "Build a ground matrix from a grouping file");
  build->fallthrough();
  build->add_option("--grouping", bm.grouping, "Grouping JSON")->required();
  build->add_option("--metric", bm.metric, "identity | power:<rho> | huber:<tau> | step");
  build->add_option("--out", bm.out, "Output matrix path (relative to --out-dir)");

  LossEvalArgs le;
  auto* loss_eval = app.add_subcommand("loss-eval", "Evaluate a loss for one or more histograms");
  loss_eval->fallthrough();
  loss_eval->add_option("--probs", le.probs, "Comma-separated histogram; repeatable")->required();
  loss_eval->add_flag("--logits", le.logits, "Treat --probs as logits and apply softmax");
  loss_eval->add_option("--target", le.target, "Ground-truth class index");
  loss_eval->add_option("--target-probs", le.target_probs, "Comma-separated target histogram");
  loss_eval->add_option("--smooth", le.smooth, "Uniform smoothing alpha for --target");
  loss_eval->add_option("--matrix", le.matrix, "Ground matrix JSON");
  loss_eval->add_option("--grouping", le.grouping, "Grouping JSON (builds the matrix)");
  loss_eval->add_option("--metric", le.metric, "Metric function applied to the matrix");
  loss_eval->add_option("--loss", le.loss, "wasserstein | exact | sinkhorn | l1 | ce | regression")
      ->check(CLI::IsMember({"wasserstein", "exact", "sinkhorn", "l1", "ce", "regression"}));
  loss_eval->add_option("--epsilon", le.epsilon, "Sinkhorn regularization");
  loss_eval->add_option("--max-iter", le.max_iter, "Sinkhorn iteration cap");
  loss_eval->add_option("--tol", le.tol, "Sinkhorn marginal tolerance");
  loss_eval->add_flag("--oracle", le.oracle, "Also solve the exact LP and report the gap");

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train a softmax classifier from a config file");
  train_cmd->fallthrough();
  train_cmd->add_option("--config", ta.config, "Run config JSON")->required();
  train_cmd->add_option("--warm-start", ta.warm_start, "Initial model JSON");
  train_cmd->add_option("--seeds", ta.seeds, "Seed list: 0..9 or 0,1,2; compares against CE");

  EvaluateArgs ev;
  auto* eval_cmd = app.add_subcommand("evaluate", "Confusion, IoU and severity report");
  eval_cmd->fallthrough();
  eval_cmd->add_option("--model", ev.model, "Model JSON");
  eval_cmd->add_option("--dataset", ev.dataset, "Dataset JSON");
  eval_cmd->add_option("--pred-map", ev.pred_map, "Predicted segmentation map (JSON or CSV)");
  eval_cmd->add_option("--truth-map", ev.truth_map, "Ground-truth segmentation map");
  eval_cmd->add_option("--matrix", ev.matrix, "Ground matrix for the severity error");
  eval_cmd->add_option("--grouping", ev.grouping, "Grouping for group IoU");
  eval_cmd->add_flag("--table", ev.table, "Print an aligned text table instead of JSON");
  eval_cmd->add_option("--out", ev.out, "Also write the JSON report here");

  BenchArgs ba;
  auto* bench_cmd = app.add_subcommand("bench", "Time onehot, sinkhorn and exact solvers");
  bench_cmd->fallthrough();
  bench_cmd->add_option("--sizes", ba.sizes, "Comma-separated class counts");
  bench_cmd->add_option("--repetitions", ba.repetitions, "Timed samples per solver and size");
  bench_cmd->add_option("--out", ba.out, "Also write the CSV here");

  GradCheckArgs ga;
  auto* grad_cmd = app.add_subcommand("grad-check", "Finite-difference check of loss gradients");
  grad_cmd->fallthrough();
  grad_cmd->add_option("--loss", ga.loss, "ce | wasserstein | l1");
  grad_cmd->add_option("--classes", ga.classes, "Class count (ignored with --matrix)");
  grad_cmd->add_option("--features", ga.features, "Feature dimension");
  grad_cmd->add_option("--pixels", ga.pixels, "Batch size");
  grad_cmd->add_option("--step", ga.h, "Central-difference step h");
  grad_cmd->add_option("--matrix", ga.matrix, "Ground matrix JSON (random if absent)");
  grad_cmd->add_option("--metric", ga.metric, "Metric function for wasserstein");
  grad_cmd->add_option("--smoothing", ga.smoothing, "Target smoothing for l1");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  for (const std::string& s : args) argv.push_back(s.c_str());
  if (argv.empty()) argv.push_back("sevot");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }
  if (seed_opt->count() > 0) globals.seed = seed_value;

  try {
    if (*build) return cmd_build_matrix(bm, globals, out);
    if (*loss_eval) return cmd_loss_eval(le, out);
    if (*train_cmd) return cmd_train(ta, globals, out);
    if (*eval_cmd) return cmd_evaluate(ev, globals, out);
    if (*bench_cmd) return cmd_bench(ba, globals, out);
    if (*grad_cmd) return cmd_grad_check(ga, globals, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    for (const std::string& line : e.details()) err << "  " << line << "\n";
    return kInputError;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kNumericalError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}

}  // namespace sevot::cli
