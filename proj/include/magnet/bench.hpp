#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "magnet/simgen.hpp"
#include "magnet/solver.hpp"

namespace magnet {

inline constexpr const char* kBenchSchema = "magnet-bench/1";

struct BenchSpec {
  GraphKind kind = GraphKind::kChain;
  Regime regime = Regime::kFull;
  std::vector<int> p_values{20, 40};
  std::vector<int> k_values{3};
  std::vector<double> thetas{1, 2, 4, 8, 13, 16};
  int replicates = 20;
  int grid_size = 30;
  std::uint64_t seed = 0;
  int jobs = 1;
  /// When false, mean_runtime is reported as 0 so output is byte-stable.
  bool record_timing = true;
  SolverConfig solver;

  void validate() const;
};

struct BenchRow {
  GraphKind kind = GraphKind::kChain;
  Regime regime = Regime::kFull;
  int p = 0;
  int k = 0;
  double theta = 0.0;
  long long n = 0;
  double extra_fraction = 0.0;
  int replicates = 0;
  int failures = 0;
  double mean_hamming = 0.0;
  double sd_hamming = 0.0;
  double exact_recovery_rate = 0.0;
  /// Seconds per replicate fit, averaged over successful replicates.
  double mean_runtime = 0.0;
};

/// One row per (p, k, theta). Replicate r uses truth seed (seed + r) for
/// every theta, and its samples come from one fixed stream so a larger
/// theta extends the smaller sample. Each fit selects lambda by BIC over a
/// warm-started path of grid_size values. Replicates that throw are counted
/// in `failures` and excluded from the means.
std::vector<BenchRow> run_bench(const BenchSpec& spec);

/// Like run_bench, with one row per extra fraction f: the base n samples are
/// fully observed and ceil(f n) further samples observe only each node's
/// first attribute; the masked covariance feeds the solver.
std::vector<BenchRow> run_partial_observation_bench(const BenchSpec& spec,
                                                    const std::vector<double>& extra_fractions);

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

/// Gnuplot script plotting mean Hamming distance against theta from csv_path.
std::string bench_gnuplot_script(const std::string& csv_path, const std::vector<BenchRow>& rows);

/// Spearman rank correlation with average ranks for ties; NaN if either
/// input is constant.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace magnet
