#pragma once

#include "sevot/common.hpp"
#include "sevot/sinkhorn.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sevot {

struct BenchOptions {
  std::vector<Index> sizes{16, 256, 4096};
  int repetitions = 5;
  std::uint64_t seed = 0;
  // Shortest wall time of a single timed sample; fast calls are looped.
  double min_sample_seconds = 2e-3;
  // Fixed iteration budget so timings compare per-iteration work.
  SinkhornOptions sinkhorn{0.1, 20, 1e-300, SinkhornDomain::automatic};
};

struct BenchRow {
  Index n = 0;
  std::string solver;  // onehot | sinkhorn | exact_lp
  std::optional<double> median_seconds;  // nullopt when skipped
  int repetitions = 0;
  long calls_per_sample = 0;
};

std::vector<BenchRow> run_bench(const BenchOptions& options);

// "n,solver,median_seconds,repetitions,calls_per_sample"; skipped rows
// carry "skipped" in the time column.
std::string bench_csv(const std::vector<BenchRow>& rows);

// Time ratio between consecutive sizes for one solver, in size order.
std::vector<double> growth_ratios(const std::vector<BenchRow>& rows, const std::string& solver);

}  // namespace sevot
