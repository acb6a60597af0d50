#include "sevot/bench.hpp"

#include "sevot/exact_lp.hpp"
#include "sevot/labels.hpp"
#include "sevot/wasserstein.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <sstream>

namespace sevot {

namespace {

using Clock = std::chrono::steady_clock;

// Keeps timed results observable so calls are not elided.
volatile double g_sink = 0.0;

template <typename F>
double seconds_for(long calls, F& body) {
  const auto start = Clock::now();
  for (long k = 0; k < calls; ++k) g_sink = g_sink + body();
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename F>
BenchRow time_solver(Index n, const std::string& solver, const BenchOptions& options, F body) {
  BenchRow row{n, solver, std::nullopt, options.repetitions, 1};
  while (seconds_for(row.calls_per_sample, body) < options.min_sample_seconds &&
         row.calls_per_sample < (1L << 30)) {
    row.calls_per_sample *= 2;
  }
  std::vector<double> samples;
  for (int r = 0; r < std::max(1, options.repetitions); ++r) {
    samples.push_back(seconds_for(row.calls_per_sample, body) /
                      static_cast<double>(row.calls_per_sample));
  }
  std::sort(samples.begin(), samples.end());
  const size_t mid = samples.size() / 2;
  row.median_seconds = samples.size() % 2 == 1 ? samples[mid]
                                               : 0.5 * (samples[mid - 1] + samples[mid]);
  return row;
}

}  // namespace

std::vector<BenchRow> run_bench(const BenchOptions& options) {
  std::vector<BenchRow> rows;
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Index n : options.sizes) {
    if (n < 2) throw ValidationError("bench sizes must be >= 2");
    Matrix<double> entries(n, n);
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < n; ++i) entries(i, j) = i == j ? 0.0 : 0.05 + unit(rng);
    }
    const GroundMatrix<double> d(std::move(entries));
    Vector<double> raw(n);
    for (Index i = 0; i < n; ++i) raw(i) = 0.01 + unit(rng);
    const auto s = ProbabilityHistogram<double>::normalized(raw);
    const Index j_star = static_cast<Index>(rng() % static_cast<std::uint64_t>(n));
    const auto t = smooth_onehot(OneHotTarget(n, j_star), 0.2).histogram();

    rows.push_back(time_solver(n, "onehot", options,
                               [&] { return onehot_loss_value(s, j_star, d); }));
    BenchOptions single = options;
    single.min_sample_seconds = 0.0;
    rows.push_back(time_solver(n, "sinkhorn", n >= 1024 ? single : options,
                               [&] { return sinkhorn_loss(s, t, d, options.sinkhorn).loss; }));
    if (n <= kExactLpMaxClasses) {
      rows.push_back(time_solver(n, "exact_lp", options,
                                 [&] { return exact_lp_loss(s, t, d).loss; }));
    } else {
      rows.push_back(BenchRow{n, "exact_lp", std::nullopt, 0, 0});
    }
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << "n,solver,median_seconds,repetitions,calls_per_sample\n";
  os.precision(6);
  for (const BenchRow& r : rows) {
    os << r.n << ',' << r.solver << ',';
    if (r.median_seconds) {
      os << std::scientific << *r.median_seconds << std::defaultfloat;
    } else {
      os << "skipped";
    }
    os << ',' << r.repetitions << ',' << r.calls_per_sample << '\n';
  }
  return os.str();
}

std::vector<double> growth_ratios(const std::vector<BenchRow>& rows, const std::string& solver) {
  std::vector<const BenchRow*> picked;
  for (const BenchRow& r : rows) {
    if (r.solver == solver && r.median_seconds) picked.push_back(&r);
  }
  std::sort(picked.begin(), picked.end(), [](const BenchRow* a, const BenchRow* b) {
    return a->n < b->n;
  });
  std::vector<double> ratios;
  for (size_t k = 1; k < picked.size(); ++k) {
    ratios.push_back(*picked[k]->median_seconds / *picked[k - 1]->median_seconds);
  }
  return ratios;
}

}  // namespace sevot
