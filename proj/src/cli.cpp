#include "magnet/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "magnet/bench.hpp"
#include "magnet/data.hpp"
#include "magnet/error.hpp"
#include "magnet/interpretation.hpp"
#include "magnet/io.hpp"
#include "magnet/model_select.hpp"
#include "magnet/rng.hpp"
#include "magnet/screening.hpp"
#include "magnet/simgen.hpp"
#include "magnet/solver.hpp"
#include "magnet/theory.hpp"

#ifndef MAGNET_VERSION
#define MAGNET_VERSION "0.0.0"
#endif

namespace magnet::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;
using Eigen::MatrixXd;

const char* version() { return MAGNET_VERSION; }

namespace {

// Raised for a well-formed run whose solver did not converge; outputs are
// still written before the failure is reported.
struct NonConvergence : NumericalError {
  using NumericalError::NumericalError;
};

json nan_to_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

BicForm parse_bic(const std::string& s) {
  if (s == "refit") return BicForm::kRefit;
  if (s == "deviance") return BicForm::kDeviance;
  if (s == "literal") return BicForm::kLiteral;
  throw InputError("unknown BIC form '" + s + "' (expected refit, deviance or literal)");
}

void require_files(std::initializer_list<const std::string*> paths) {
  for (const auto* p : paths)
    if (p && !p->empty() && !fs::is_regular_file(*p))
      throw InputError("input file '" + *p + "' does not exist");
}

fs::path out_path(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  return fs::path(dir) / name;
}

void write_json(const fs::path& path, const json& j) { io::write_text(path.string(), j.dump(2) + "\n"); }

struct SolverFlags {
  double epsilon = 1e-3;
  int max_sweeps = 500;
  double kkt_tolerance = 0.0;
  bool persistent_step = false;
  int dual_steps = 3;

  void add(CLI::App* app) {
    app->add_option("--epsilon", epsilon, "Duality-gap tolerance")->capture_default_str();
    app->add_option("--max-sweeps", max_sweeps, "Maximum sweeps over the nodes")->capture_default_str();
    app->add_option("--kkt-tol", kkt_tolerance,
                    "Also require the KKT residual to fall below this (0 disables)")
        ->capture_default_str();
    app->add_option("--dual-steps", dual_steps, "Dual ascent steps per gap evaluation")->capture_default_str();
    app->add_flag("--persistent-step", persistent_step,
                  "Never grow a node's step size again after it has been halved");
  }
  SolverConfig config(double lambda = 1.0) const {
    SolverConfig c;
    c.lambda = lambda;
    c.epsilon = epsilon;
    c.max_sweeps = max_sweeps;
    c.kkt_tolerance = kkt_tolerance;
    c.dual_ascent_steps = dual_steps;
    c.step_policy = persistent_step ? StepPolicy::kPersistent : StepPolicy::kAdaptive;
    return c;
  }
  json to_json() const {
    return {{"epsilon", epsilon},
            {"max_sweeps", max_sweeps},
            {"kkt_tolerance", kkt_tolerance},
            {"dual_ascent_steps", dual_steps},
            {"step_policy", persistent_step ? "persistent" : "adaptive"}};
  }
};

// Covariance input: either a covariance CSV or a dataset (with optional mask).
struct CovInput {
  std::string cov, data, mask, layout;
  bool no_center = false;
  int n = 0;

  void add(CLI::App* app, bool allow_cov = true) {
    if (allow_cov) app->add_option("--cov", cov, "Covariance matrix CSV");
    app->add_option("--data", data, "Dataset CSV (rows are samples)");
    app->add_option("--mask", mask, "0/1 observation mask CSV matching the dataset");
    app->add_option("--layout", layout, "Layout JSON {\"attr_counts\": [...]}")->required();
    app->add_flag("--no-center", no_center, "Do not subtract column means from the data");
    if (allow_cov) app->add_option("--n", n, "Sample count behind --cov (needed for BIC)");
  }
  void check() const {
    if (cov.empty() == data.empty()) throw CLI::ValidationError("exactly one of --cov or --data is required");
    if (!mask.empty() && data.empty()) throw CLI::ValidationError("--mask requires --data");
  }
  void require() const { require_files({&cov, &data, &mask, &layout}); }
  json to_json() const {
    return {{"cov", cov}, {"data", data}, {"mask", mask}, {"layout", layout},
            {"center", !no_center}, {"n", n}};
  }
};

Dataset load_dataset(const std::string& data, const std::string& mask, const AttributeLayout& layout) {
  Dataset d;
  d.layout = layout;
  d.values = io::read_matrix_csv(data);
  if (!mask.empty()) {
    d.mask = io::read_matrix_csv(mask);
  } else if (!d.values.allFinite()) {
    // Non-finite entries in an unmasked file are treated as missing.
    d.mask = d.values.unaryExpr([](double v) { return std::isfinite(v) ? 1.0 : 0.0; });
  }
  d.validate();
  return d;
}

// Column means over observed entries, subtracted in place.
void center_observed(Dataset& d) {
  for (Eigen::Index j = 0; j < d.values.cols(); ++j) {
    double sum = 0.0, count = 0.0;
    for (Eigen::Index i = 0; i < d.values.rows(); ++i)
      if (!d.mask || (*d.mask)(i, j) == 1.0) {
        sum += d.values(i, j);
        count += 1.0;
      }
    if (count == 0.0) continue;
    const double mean = sum / count;
    for (Eigen::Index i = 0; i < d.values.rows(); ++i)
      if (!d.mask || (*d.mask)(i, j) == 1.0) d.values(i, j) -= mean;
  }
}

CovEstimate covariance_of(Dataset d, bool center) {
  if (d.fully_observed()) return sample_covariance(d, center);
  if (center) center_observed(d);
  return masked_covariance(d);
}

CovEstimate load_cov(const CovInput& in) {
  const AttributeLayout layout = io::read_layout_json(in.layout);
  if (!in.cov.empty()) {
    MatrixXd s = io::read_matrix_csv(in.cov);
    if (s.rows() != layout.total_dim() || s.cols() != layout.total_dim())
      throw InputError("covariance is " + std::to_string(s.rows()) + "x" + std::to_string(s.cols()) +
                       " but the layout has dimension " + std::to_string(layout.total_dim()));
    CovEstimate c;
    c.s = BlockSymMatrix(layout, std::move(s));
    c.n = in.n;
    c.n_eff = Eigen::MatrixXi::Constant(layout.node_count(), layout.node_count(), in.n);
    return c;
  }
  return covariance_of(load_dataset(in.data, in.mask, layout), !in.no_center);
}

json report_json(const SolverReport& r) {
  return {{"objective", nan_to_null(r.objective)},
          {"final_gap", nan_to_null(r.final_gap)},
          {"gap_available", r.gap_available},
          {"sweeps", r.sweeps},
          {"step_halvings", r.step_halvings},
          {"node_updates", r.node_updates},
          {"converged", r.converged},
          {"edges", Graph::from_precision(r.omega_hat).edge_count()}};
}

json envelope(const std::string& command, json config, json result, std::uint64_t seed) {
  return {{"schema", kReportSchema},
          {"version", version()},
          {"command", command},
          {"seed", seed},
          {"config", std::move(config)},
          {"result", std::move(result)}};
}

// ---- subcommands --------------------------------------------------------

struct Command {
  CLI::App* app = nullptr;
  std::function<int(std::ostream&)> run;
  std::function<void()> check = [] {};
};

Command add_estimate(CLI::App& root, int& jobs, std::uint64_t& seed) {
  auto* app = root.add_subcommand("estimate", "Fit the block-penalized precision matrix");
  auto in = std::make_shared<CovInput>();
  auto sf = std::make_shared<SolverFlags>();
  auto lambda = std::make_shared<double>(0.0);
  auto grid = std::make_shared<int>(0);
  auto screen_flag = std::make_shared<bool>(false);
  auto out = std::make_shared<std::string>(".");
  in->add(app);
  sf->add(app);
  auto* lopt = app->add_option("--lambda", *lambda, "Penalty parameter");
  auto* gopt = app->add_option("--grid", *grid, "Select lambda by BIC over a grid of this size");
  lopt->excludes(gopt);
  app->add_flag("--screen", *screen_flag, "Solve screened components separately");
  app->add_option("--out", *out, "Output directory")->capture_default_str();
  Command c;
  c.app = app;
  c.check = [=] {
    in->check();
    if (app->count("--lambda") == 0 && app->count("--grid") == 0)
      throw CLI::ValidationError("--lambda or --grid is required");
  };
  c.run = [=, &jobs, &seed](std::ostream& os) {
    in->require();
    const CovEstimate s = load_cov(*in);
    double lam = *lambda;
    json selection = nullptr;
    if (*grid > 0) {
      if (s.n < 2) throw InputError("--grid needs the sample count (--n with --cov)");
      lam = select_lambda_bic(s, *grid, sf->config());
      selection = {{"method", "bic"}, {"grid_size", *grid}, {"lambda", lam}};
    }
    const SolverConfig cfg = sf->config(lam);
    const SolverReport rep = *screen_flag ? estimate_screened(s, cfg, jobs) : estimate(s, cfg);
    io::write_matrix_csv(out_path(*out, "omega.csv").string(), rep.omega_hat.dense());
    io::write_matrix_csv(out_path(*out, "sigma.csv").string(), rep.sigma_hat.dense());
    io::write_edges_csv(out_path(*out, "edges.csv").string(), rep.omega_hat);
    json config = in->to_json();
    config["lambda"] = lam;
    config["solver"] = sf->to_json();
    config["screen"] = *screen_flag;
    config["jobs"] = jobs;
    config["selection"] = selection;
    json result = report_json(rep);
    result["kkt_residual"] = kkt_residual(rep.omega_hat.dense(), rep.sigma_hat.dense(), s.s, lam);
    write_json(out_path(*out, "report.json"), envelope("estimate", config, result, seed));
    os << "lambda=" << lam << " edges=" << result["edges"] << " sweeps=" << rep.sweeps
       << " gap=" << rep.final_gap << (rep.converged ? "" : " (not converged)") << '\n';
    if (!rep.converged)
      throw NonConvergence("solver did not converge within " + std::to_string(cfg.max_sweeps) + " sweeps");
    return kExitOk;
  };
  return c;
}

Command add_path(CLI::App& root, std::uint64_t& seed) {
  auto* app = root.add_subcommand("path", "Fit a warm-started regularization path with BIC");
  auto in = std::make_shared<CovInput>();
  auto sf = std::make_shared<SolverFlags>();
  auto size = std::make_shared<int>(30);
  auto bic_form = std::make_shared<std::string>("refit");
  auto out = std::make_shared<std::string>(".");
  in->add(app);
  sf->add(app);
  app->add_option("--grid-size", *size, "Number of lambda values")->capture_default_str();
  app->add_option("--bic", *bic_form, "BIC form: refit, deviance or literal")->capture_default_str();
  app->add_option("--out", *out, "Output directory")->capture_default_str();
  Command c;
  c.app = app;
  c.check = [=] { in->check(); };
  c.run = [=, &seed](std::ostream& os) {
    in->require();
    const CovEstimate s = load_cov(*in);
    if (s.n < 2) throw InputError("path needs the sample count (--n with --cov)");
    std::string warning;
    const auto grid = lambda_grid(s.s, *size, &warning);
    PathOptions opts;
    opts.bic_form = parse_bic(*bic_form);
    const PathResult path = fit_path(s, grid, sf->config(), opts);
    {
      std::ofstream f(out_path(*out, "path.csv"));
      f.precision(17);
      f << "index,lambda,edges,bic,sweeps,final_gap,converged\n";
      for (std::size_t i = 0; i < grid.size(); ++i)
        f << i << ',' << grid[i] << ',' << path.edge_counts[i] << ',' << path.bic[i] << ','
          << path.reports[i].sweeps << ',' << path.reports[i].final_gap << ','
          << path.reports[i].converged << '\n';
    }
    const auto& best = path.reports[path.best_index];
    io::write_matrix_csv(out_path(*out, "omega.csv").string(), best.omega_hat.dense());
    io::write_edges_csv(out_path(*out, "edges.csv").string(), best.omega_hat);
    json config = in->to_json();
    config["grid_size"] = *size;
    config["bic"] = *bic_form;
    config["solver"] = sf->to_json();
    json result = {{"best_index", path.best_index},
                   {"best_lambda", grid[path.best_index]},
                   {"lambdas", grid},
                   {"bic", path.bic},
                   {"edge_counts", path.edge_counts}};
    if (!warning.empty()) result["warning"] = warning;
    write_json(out_path(*out, "path.json"), envelope("path", config, result, seed));
    if (!warning.empty()) os << "warning: " << warning << '\n';
    os << "best lambda=" << grid[path.best_index] << " edges=" << path.edge_counts[path.best_index] << '\n';
    return kExitOk;
  };
  return c;
}

Command add_stability(CLI::App& root, int& jobs, std::uint64_t& seed) {
  auto* app = root.add_subcommand("stability", "Stability selection over random subsamples");
  auto in = std::make_shared<CovInput>();
  auto sf = std::make_shared<SolverFlags>();
  auto lambda = std::make_shared<double>(0.0);
  auto size = std::make_shared<int>(30);
  auto cfg = std::make_shared<StabilityConfig>();
  auto out = std::make_shared<std::string>(".");
  in->add(app, false);
  sf->add(app);
  app->add_option("--lambda", *lambda, "Penalty (default: BIC pre-selection on the full data)");
  app->add_option("--grid-size", *size, "Grid size for BIC pre-selection")->capture_default_str();
  app->add_option("--reps", cfg->reps, "Number of subsamples")->capture_default_str();
  app->add_option("--fraction", cfg->fraction, "Subsample fraction")->capture_default_str();
  app->add_option("--threshold", cfg->threshold, "Minimum count for a stable edge")->capture_default_str();
  app->add_option("--out", *out, "Output directory")->capture_default_str();
  Command c;
  c.app = app;
  c.check = [=] { in->check(); };
  c.run = [=, &jobs, &seed](std::ostream& os) {
    in->require();
    const AttributeLayout layout = io::read_layout_json(in->layout);
    const Dataset d = load_dataset(in->data, in->mask, layout);
    double lam = *lambda;
    const bool selected = app->count("--lambda") == 0;
    if (selected) lam = select_lambda_bic(covariance_of(d, !in->no_center), *size, sf->config());
    StabilityConfig run = *cfg;
    run.seed = seed;
    run.jobs = jobs;
    run.center = !in->no_center;
    run.solver = sf->config(lam);
    const StabilityResult r = stability_select(d, lam, run);
    io::write_edges_csv(out_path(*out, "stable_edges.csv").string(), r.stable_edges);
    json counts = json::array();
    for (int a = 0; a < layout.node_count(); ++a)
      for (int b = a + 1; b < layout.node_count(); ++b)
        if (r.edge_counts(a, b) > 0) counts.push_back({{"a", a}, {"b", b}, {"count", r.edge_counts(a, b)}});
    json config = in->to_json();
    config["lambda"] = lam;
    config["lambda_selection"] = selected ? "bic" : "user";
    config["grid_size"] = *size;
    config["reps"] = run.reps;
    config["fraction"] = run.fraction;
    config["threshold"] = run.threshold;
    config["seed"] = seed;
    config["jobs"] = jobs;
    config["solver"] = sf->to_json();
    json result = {{"failed", r.failed},
                   {"stable_edge_count", r.stable_edges.edge_count()},
                   {"edge_counts", counts}};
    write_json(out_path(*out, "stability.json"), envelope("stability", config, result, seed));
    os << "lambda=" << lam << " stable edges=" << r.stable_edges.edge_count() << " failed=" << r.failed << '\n';
    return kExitOk;
  };
  return c;
}

Command add_screen(CLI::App& root, std::uint64_t& seed) {
  auto* app = root.add_subcommand("screen", "Connected components of the thresholded block norms");
  auto in = std::make_shared<CovInput>();
  auto lambda = std::make_shared<double>(0.0);
  auto out = std::make_shared<std::string>(".");
  in->add(app);
  app->add_option("--lambda", *lambda, "Threshold")->required();
  app->add_option("--out", *out, "Output directory")->capture_default_str();
  Command c;
  c.app = app;
  c.check = [=] { in->check(); };
  c.run = [=, &seed](std::ostream& os) {
    in->require();
    if (*lambda < 0) throw InputError("--lambda must be >= 0");
    const ComponentPartition part = screen(load_cov(*in).s, *lambda);
    json config = in->to_json();
    config["lambda"] = *lambda;
    write_json(out_path(*out, "components.json"),
               envelope("screen", config, {{"components", part.components}}, seed));
    os << part.size() << " components\n";
    return kExitOk;
  };
  return c;
}

Command add_interpret(CLI::App& root) {
  auto* app = root.add_subcommand("interpret", "Partial canonical correlations and edge classes");
  auto data = std::make_shared<std::string>();
  auto layout_path = std::make_shared<std::string>();
  auto edges = std::make_shared<std::string>();
  auto attr = std::make_shared<int>(1);
  auto threshold = std::make_shared<double>(0.25);
  auto ridge = std::make_shared<double>(0.0);
  auto out = std::make_shared<std::string>(".");
  app->add_option("--data", *data, "Dataset CSV")->required();
  app->add_option("--layout", *layout_path, "Layout JSON")->required();
  app->add_option("--edges", *edges, "Estimated edges CSV (node_a,node_b,...)")->required();
  app->add_option("--attr-index", *attr, "Designated attribute index (0-based)")->capture_default_str();
  app->add_option("--threshold", *threshold, "Classification threshold T")->capture_default_str();
  app->add_option("--ridge", *ridge, "Ridge penalty for rank-deficient blankets")->capture_default_str();
  app->add_option("--out", *out, "Output directory")->capture_default_str();
  Command c;
  c.app = app;
  c.run = [=](std::ostream& os) {
    require_files({data.get(), layout_path.get(), edges.get()});
    const AttributeLayout layout = io::read_layout_json(*layout_path);
    const Dataset d = load_dataset(*data, "", layout);
    const Graph g = io::read_edges_csv(*edges, layout.node_count());
    std::vector<EdgeInterpretation> interps;
    for (const auto& [a, b] : g.edges()) interps.push_back(interpret_edge(d, g, a, b, *ridge));
    const auto classes = classify_edges(interps, *attr, *threshold);
    const auto nodes = classify_nodes(interps, classes, layout.node_count());
    {
      std::ofstream f(out_path(*out, "interpretations.csv"));
      f.precision(17);
      f << "a,b,rho";
      const int ka = layout.max_attr_count();
      for (int i = 0; i < ka; ++i) f << ",w_a" << i;
      for (int i = 0; i < ka; ++i) f << ",w_b" << i;
      f << ",w_sq,class,degenerate\n";
      for (std::size_t e = 0; e < interps.size(); ++e) {
        const auto& it = interps[e];
        f << it.a << ',' << it.b << ',' << it.rho;
        for (int i = 0; i < ka; ++i) f << ',' << (i < it.w_a.size() ? std::to_string(it.w_a(i)) : "");
        for (int i = 0; i < ka; ++i) f << ',' << (i < it.w_b.size() ? std::to_string(it.w_b(i)) : "");
        f << ',' << classes[e].w_sq << ',' << to_string(classes[e].label) << ',' << it.degenerate << '\n';
      }
    }
    {
      std::ofstream f(out_path(*out, "nodes.csv"));
      f.precision(17);
      f << "node,edges,p1,p2,p3\n";
      for (int v = 0; v < layout.node_count(); ++v) {
        f << v << ',' << nodes[v].edge_count;
        if (nodes[v].proportions)
          f << ',' << (*nodes[v].proportions)(0) << ',' << (*nodes[v].proportions)(1) << ','
            << (*nodes[v].proportions)(2) << '\n';
        else
          f << ",NA,NA,NA\n";
      }
    }
    os << interps.size() << " edges interpreted\n";
    return kExitOk;
  };
  return c;
}

Command add_simulate(CLI::App& root, std::uint64_t& seed) {
  auto* app = root.add_subcommand("simulate", "Generate a synthetic ground truth and samples");
  auto kind = std::make_shared<std::string>("chain");
  auto regime = std::make_shared<std::string>("full");
  auto p = std::make_shared<int>(20);
  auto k = std::make_shared<int>(3);
  auto theta = std::make_shared<double>(13.0);
  auto n = std::make_shared<int>(0);
  auto out = std::make_shared<std::string>(".");
  app->add_option("--kind", *kind, "chain or nn")->capture_default_str();
  app->add_option("--regime", *regime, "full, diagonal, zero-diagonal or uniform-random")->capture_default_str();
  app->add_option("--p", *p, "Number of nodes")->capture_default_str();
  app->add_option("--k", *k, "Attributes per node")->capture_default_str();
  app->add_option("--theta", *theta, "Rescaled sample size")->capture_default_str();
  app->add_option("--samples", *n, "Sample count (overrides --theta)");
  app->add_option("--out", *out, "Output directory")->capture_default_str();
  Command c;
  c.app = app;
  c.run = [=, &seed](std::ostream& os) {
    const GroundTruth truth = generate(parse_graph_kind(*kind), *p, *k, seed, parse_regime(*regime));
    const long long count = *n > 0 ? *n : theta_to_n(*theta, truth.s, *k, *p);
    if (count < 1) throw InputError("sample count must be >= 1 (theta too small?)");
    const Dataset d = sample_mvn(truth.precision, static_cast<int>(count), splitmix64(seed ^ 0xda7aULL));
    io::write_edges_csv(out_path(*out, "truth_edges.csv").string(), truth.graph);
    io::write_matrix_csv(out_path(*out, "precision.csv").string(), truth.precision.dense());
    io::write_matrix_csv(out_path(*out, "data.csv").string(), d.values);
    io::write_layout_json(out_path(*out, "layout.json").string(), truth.layout);
    json config = {{"kind", *kind}, {"regime", *regime}, {"p", *p}, {"k", *k},
                   {"theta", *theta}, {"n", count}, {"seed", seed}};
    json result = {{"edges", truth.graph.edge_count()}, {"rho", truth.rho},
                   {"max_degree", truth.graph.max_degree()}, {"degenerate", truth.degenerate}};
    write_json(out_path(*out, "simulate.json"), envelope("simulate", config, result, seed));
    os << "n=" << count << " edges=" << truth.graph.edge_count() << '\n';
    return kExitOk;
  };
  return c;
}

template <class T>
std::vector<T> parse_list(const std::string& s, const char* flag) {
  std::vector<T> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::istringstream v(item);
    T x;
    if (!(v >> x) || !(v >> std::ws).eof())
      throw InputError(std::string(flag) + ": cannot parse '" + item + "'");
    out.push_back(x);
  }
  if (out.empty()) throw InputError(std::string(flag) + ": empty list");
  return out;
}

Command add_bench(CLI::App& root, int& jobs, std::uint64_t& seed) {
  auto* app = root.add_subcommand("bench", "Hamming distance against rescaled sample size");
  struct Flags {
    std::string kind = "chain", regime = "full", p = "20", k = "3", thetas = "1,2,4,8,13,16";
    std::string extra, out = "bench.csv";
    int reps = 20, grid = 30;
    bool gnuplot = false, no_timing = false;
  };
  auto f = std::make_shared<Flags>();
  auto sf = std::make_shared<SolverFlags>();
  sf->add(app);
  app->add_option("--kind", f->kind, "chain or nn")->capture_default_str();
  app->add_option("--regime", f->regime, "Off-diagonal block regime")->capture_default_str();
  app->add_option("--p", f->p, "Comma-separated node counts")->capture_default_str();
  app->add_option("--k", f->k, "Comma-separated attribute counts")->capture_default_str();
  app->add_option("--thetas", f->thetas, "Comma-separated ascending theta grid")->capture_default_str();
  app->add_option("--reps", f->reps, "Replicates per setting")->capture_default_str();
  app->add_option("--grid-size", f->grid, "Lambda grid size for BIC")->capture_default_str();
  app->add_option("--extra-fractions", f->extra,
                  "Partial observation: comma-separated extra first-attribute sample fractions");
  app->add_option("--out", f->out, "Output CSV")->capture_default_str();
  app->add_flag("--emit-gnuplot", f->gnuplot, "Also write <out>.gp");
  app->add_flag("--no-timing", f->no_timing, "Report runtime as 0 for byte-stable output");
  Command c;
  c.app = app;
  c.run = [=, &jobs, &seed](std::ostream& os) {
    BenchSpec spec;
    spec.kind = parse_graph_kind(f->kind);
    spec.regime = parse_regime(f->regime);
    spec.p_values = parse_list<int>(f->p, "--p");
    spec.k_values = parse_list<int>(f->k, "--k");
    spec.thetas = parse_list<double>(f->thetas, "--thetas");
    spec.replicates = f->reps;
    spec.grid_size = f->grid;
    spec.seed = seed;
    spec.jobs = jobs;
    spec.record_timing = !f->no_timing;
    spec.solver = sf->config();
    const auto rows = f->extra.empty()
                          ? run_bench(spec)
                          : run_partial_observation_bench(spec, parse_list<double>(f->extra, "--extra-fractions"));
    {
      const fs::path p(f->out);
      if (p.has_parent_path()) fs::create_directories(p.parent_path());
      std::ofstream csv(p);
      if (!csv) throw InputError("cannot open '" + f->out + "' for writing");
      write_bench_csv(csv, rows);
    }
    if (f->gnuplot) io::write_text(f->out + ".gp", bench_gnuplot_script(f->out, rows));
    write_bench_csv(os, rows);
    return kExitOk;
  };
  return c;
}

Command add_theory(CLI::App& root, std::uint64_t& seed) {
  auto* app = root.add_subcommand("theory", "Irrepresentability and sample-size diagnostics");
  auto precision = std::make_shared<std::string>();
  auto layout_path = std::make_shared<std::string>();
  auto opts = std::make_shared<TheoryOptions>();
  auto out = std::make_shared<std::string>(".");
  app->add_option("--precision", *precision, "True precision matrix CSV")->required();
  app->add_option("--layout", *layout_path, "Layout JSON")->required();
  app->add_option("--tau", opts->tau, "Probability exponent (> 2)")->capture_default_str();
  app->add_option("--gamma", opts->gamma, "Sub-Gaussian parameter")->capture_default_str();
  app->add_option("--n", opts->n, "Sample size for lambda (default: the sample bound)");
  app->add_option("--out", *out, "Output directory")->capture_default_str();
  Command c;
  c.app = app;
  c.run = [=, &seed](std::ostream& os) {
    require_files({precision.get(), layout_path.get()});
    const AttributeLayout layout = io::read_layout_json(*layout_path);
    MatrixXd m = io::read_matrix_csv(*precision);
    if (m.rows() != layout.total_dim() || m.cols() != layout.total_dim())
      throw InputError("precision dimension does not match the layout");
    const TheoryDiagnostics d = diagnose(BlockSymMatrix(layout, std::move(m)), *opts);
    json config = {{"precision", *precision}, {"layout", *layout_path}, {"tau", opts->tau},
                   {"gamma", opts->gamma}, {"n", opts->n}};
    json result = {{"alpha_irrep", d.alpha_irrep},
                   {"kappa_sigma", d.kappa_sigma},
                   {"kappa_h", d.kappa_h},
                   {"lambda_prop1", nan_to_null(d.lambda_prop1)},
                   {"n_min_prop1", nan_to_null(d.n_min_prop1)},
                   {"min_signal", nan_to_null(d.min_signal)},
                   {"min_signal_required", nan_to_null(d.min_signal_required)},
                   {"sigma_max_diag", d.sigma_max_diag},
                   {"max_degree", d.max_degree},
                   {"recovery_guaranteed", d.recovery_guaranteed()}};
    if (!d.recovery_guaranteed()) result["note"] = "theory does not guarantee recovery (alpha <= 0)";
    write_json(out_path(*out, "diagnostics.json"), envelope("theory", config, result, seed));
    os << result.dump(2) << '\n';
    return kExitOk;
  };
  return c;
}

void print_error(std::ostream& err, int code, const std::string& kind, const std::string& message) {
  err << json{{"error", {{"code", code}, {"kind", kind}, {"message", message}}}}.dump() << '\n';
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Markov graphs over nodes with vector-valued attributes", "magnet"};
  app.require_subcommand(0, 1);
  bool show_version = false;
  int jobs = 1;
  std::uint64_t seed = 0;
  app.add_flag("--version", show_version, "Print version and file-format schemas");
  // Shared options are accepted before or after the subcommand name.
  app.add_option("--jobs", jobs, "Worker threads for components and replicates")->capture_default_str();
  app.add_option("--seed", seed, "Random seed")->capture_default_str();
  app.fallthrough();

  std::vector<Command> commands{add_estimate(app, jobs, seed), add_path(app, seed),
                                add_stability(app, jobs, seed), add_screen(app, seed),
                                add_interpret(app), add_simulate(app, seed),
                                add_bench(app, jobs, seed), add_theory(app, seed)};
  try {
    app.parse(argc, argv);
    if (show_version) {
      out << "magnet " << version() << " (report schema " << kReportSchema << ", bench schema "
          << kBenchSchema << ")\n";
      return kExitOk;
    }
    if (jobs < 1) throw CLI::ValidationError("--jobs must be >= 1");
    const Command* chosen = nullptr;
    for (const auto& c : commands)
      if (c.app->parsed()) chosen = &c;
    if (!chosen) {
      out << app.help();
      return kExitOk;
    }
    chosen->check();
    return chosen->run(out);
  } catch (const CLI::Success&) {
    const CLI::App* sub = nullptr;
    for (const auto& c : commands)
      if (c.app->parsed()) sub = c.app;
    out << (sub ? sub->help() : app.help());
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const CLI::App* sub = nullptr;
    for (const auto& c : commands)
      if (c.app->parsed()) sub = c.app;
    out << (sub ? sub->help() : app.help());
    print_error(err, kExitUsage, "usage", e.what());
    return kExitUsage;
  } catch (const NumericalError& e) {
    print_error(err, kExitNumerical, "numerical", e.what());
    return kExitNumerical;
  } catch (const InputError& e) {
    print_error(err, kExitInput, "input", e.what());
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    print_error(err, kExitInput, "input", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    print_error(err, kExitInput, "input", e.what());
    return kExitInput;
  }
}

}  // namespace magnet::cli
