#include "magnet/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>

#include "magnet/data.hpp"
#include "magnet/error.hpp"
#include "magnet/model_select.hpp"
#include "magnet/parallel.hpp"
#include "magnet/rng.hpp"

namespace magnet {

using Eigen::MatrixXd;

void BenchSpec::validate() const {
  if (replicates < 1) throw InputError("bench: replicates must be >= 1");
  if (grid_size < 2) throw InputError("bench: grid size must be >= 2");
  if (p_values.empty() || k_values.empty() || thetas.empty())
    throw InputError("bench: p, k and theta lists must be non-empty");
  for (std::size_t i = 1; i < thetas.size(); ++i)
    if (!(thetas[i] > thetas[i - 1])) throw InputError("bench: theta grid must be ascending");
  for (int k : k_values)
    if (k < 1) throw InputError("bench: k must be >= 1");
}

namespace {

struct Outcome {
  int hamming = 0;
  double seconds = 0.0;
};

std::uint64_t data_seed(std::uint64_t truth_seed) { return splitmix64(truth_seed ^ 0xda7aULL); }

// Fits S with BIC selection over a warm path and scores the selected graph.
Outcome fit_and_score(const CovEstimate& s, const Graph& truth, const BenchSpec& spec) {
  const auto start = std::chrono::steady_clock::now();
  const auto grid = lambda_grid(s.s, spec.grid_size);
  Graph selected(truth.node_count());
  if (grid.size() > 1) {
    const PathResult path = fit_path(s, grid, spec.solver);
    selected = Graph::from_precision(path.reports[path.best_index].omega_hat);
  }
  const auto stop = std::chrono::steady_clock::now();
  Outcome o;
  o.hamming = hamming_distance(selected, truth);
  o.seconds = spec.record_timing ? std::chrono::duration<double>(stop - start).count() : 0.0;
  return o;
}

BenchRow aggregate(const BenchSpec& spec, int p, int k, double theta, long long n, double extra,
                   const std::vector<std::optional<Outcome>>& outcomes) {
  BenchRow row;
  row.kind = spec.kind;
  row.regime = spec.regime;
  row.p = p;
  row.k = k;
  row.theta = theta;
  row.n = n;
  row.extra_fraction = extra;
  row.replicates = spec.replicates;
  std::vector<double> h;
  double seconds = 0.0;
  int exact = 0;
  for (const auto& o : outcomes) {
    if (!o) {
      ++row.failures;
      continue;
    }
    h.push_back(o->hamming);
    seconds += o->seconds;
    exact += o->hamming == 0;
  }
  if (h.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row.mean_hamming = row.sd_hamming = row.exact_recovery_rate = row.mean_runtime = nan;
    return row;
  }
  const double m = static_cast<double>(h.size());
  row.mean_hamming = std::accumulate(h.begin(), h.end(), 0.0) / m;
  double ss = 0.0;
  for (double v : h) ss += (v - row.mean_hamming) * (v - row.mean_hamming);
  row.sd_hamming = h.size() > 1 ? std::sqrt(ss / (m - 1.0)) : 0.0;
  row.exact_recovery_rate = exact / m;
  row.mean_runtime = seconds / m;
  return row;
}

template <class Fit>
std::vector<std::optional<Outcome>> run_replicates(const BenchSpec& spec, Fit&& fit) {
  std::vector<std::optional<Outcome>> out(spec.replicates);
  parallel_for(spec.replicates, spec.jobs, [&](int r) {
    try {
      out[r] = fit(spec.seed + static_cast<std::uint64_t>(r));
    } catch (const Error&) {
      out[r].reset();
    }
  });
  return out;
}

}  // namespace

std::vector<BenchRow> run_bench(const BenchSpec& spec) {
  spec.validate();
  std::vector<BenchRow> rows;
  for (int p : spec.p_values)
    for (int k : spec.k_values)
      for (double theta : spec.thetas) {
        const int s = spec.kind == GraphKind::kChain ? 2 : 4;
        const long long n = theta_to_n(theta, s, k, p);
        auto outcomes = run_replicates(spec, [&](std::uint64_t seed) {
          const GroundTruth truth = generate(spec.kind, p, k, seed, spec.regime);
          if (n < 2) throw InputError("bench: sample size below 2");
          const Dataset d = sample_mvn(truth.precision, static_cast<int>(n), data_seed(seed));
          return fit_and_score(sample_covariance(d), truth.graph, spec);
        });
        rows.push_back(aggregate(spec, p, k, theta, n, 0.0, outcomes));
      }
  return rows;
}

std::vector<BenchRow> run_partial_observation_bench(const BenchSpec& spec,
                                                    const std::vector<double>& extra_fractions) {
  spec.validate();
  if (extra_fractions.empty()) throw InputError("bench: no extra fractions given");
  for (double f : extra_fractions)
    if (!(f >= 0.0)) throw InputError("bench: extra fractions must be >= 0");
  for (int k : spec.k_values)
    if (k < 2) throw InputError("partial-observation bench needs k >= 2");

  std::vector<BenchRow> rows;
  for (int p : spec.p_values)
    for (int k : spec.k_values)
      for (double theta : spec.thetas) {
        const int s = spec.kind == GraphKind::kChain ? 2 : 4;
        const long long n = theta_to_n(theta, s, k, p);
        for (double f : extra_fractions) {
          const long long extra = static_cast<long long>(std::ceil(f * double(n)));
          auto outcomes = run_replicates(spec, [&](std::uint64_t seed) {
            const GroundTruth truth = generate(spec.kind, p, k, seed, spec.regime);
            if (n < 2) throw InputError("bench: sample size below 2");
            Dataset d =
                sample_mvn(truth.precision, static_cast<int>(n + extra), data_seed(seed));
            MatrixXd mask = MatrixXd::Ones(d.values.rows(), d.values.cols());
            for (long long i = n; i < n + extra; ++i)
              for (int a = 0; a < p; ++a)
                for (int j = 1; j < k; ++j) {
                  const int col = truth.layout.offset(a) + j;
                  mask(i, col) = 0.0;
                  d.values(i, col) = 0.0;
                }
            d.mask = std::move(mask);
            return fit_and_score(masked_covariance(d), truth.graph, spec);
          });
          rows.push_back(aggregate(spec, p, k, theta, n, f, outcomes));
        }
      }
  return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "# schema: " << kBenchSchema << '\n';
  out << "kind,regime,p,k,theta,n,extra_fraction,replicates,failures,mean_hamming,sd_hamming,"
         "exact_recovery_rate,mean_runtime\n";
  std::ostringstream line;
  for (const auto& r : rows) {
    line.str("");
    line << std::setprecision(10) << to_string(r.kind) << ',' << to_string(r.regime) << ',' << r.p
         << ',' << r.k << ',' << r.theta << ',' << r.n << ',' << r.extra_fraction << ','
         << r.replicates << ',' << r.failures << ',' << r.mean_hamming << ',' << r.sd_hamming << ','
         << r.exact_recovery_rate << ',' << r.mean_runtime << '\n';
    out << line.str();
  }
}

std::string bench_gnuplot_script(const std::string& csv_path, const std::vector<BenchRow>& rows) {
  std::ostringstream s;
  s << "# gnuplot script for " << csv_path << "\n"
    << "set datafile separator ','\n"
    << "set key autotitle columnhead\n"
    << "set xlabel 'theta (rescaled sample size)'\n"
    << "set ylabel 'mean Hamming distance'\n"
    << "set terminal pngcairo size 800,600\n"
    << "set output '" << csv_path << ".png'\n";
  std::vector<std::pair<int, int>> series;
  std::vector<double> fractions;
  for (const auto& r : rows) {
    if (std::find(series.begin(), series.end(), std::pair{r.p, r.k}) == series.end())
      series.emplace_back(r.p, r.k);
    if (std::find(fractions.begin(), fractions.end(), r.extra_fraction) == fractions.end())
      fractions.push_back(r.extra_fraction);
  }
  s << "plot ";
  bool first = true;
  for (const auto& [p, k] : series)
    for (double f : fractions) {
      if (!first) s << ", \\\n     ";
      first = false;
      // Column 3 = p, 4 = k, 7 = extra_fraction; rows of other series are skipped.
      s << "'" << csv_path << "' skip 1 using ($3==" << p << " && $4==" << k << " && $7==" << f
        << " ? $5 : 1/0):10 with linespoints title 'p=" << p << " k=" << k;
      if (fractions.size() > 1) s << " extra=" << f;
      s << "'";
    }
  s << '\n';
  return s.str();
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<int> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * double(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) r[idx[t]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InputError("spearman: need two equal-length series");
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace magnet
