#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "magnet/data.hpp"
#include "magnet/error.hpp"
#include "magnet/graph.hpp"
#include "magnet/interpretation.hpp"
#include "magnet/layout.hpp"
#include "magnet/model_select.hpp"
#include "magnet/screening.hpp"
#include "magnet/simgen.hpp"
#include "magnet/solver.hpp"
#include "magnet/theory.hpp"

namespace py = pybind11;
using namespace magnet;
using Eigen::MatrixXd;

namespace {

using Edges = std::vector<Graph::Edge>;

Dataset make_dataset(const MatrixXd& x, const AttributeLayout& layout, const std::optional<MatrixXd>& mask) {
  Dataset d;
  d.layout = layout;
  d.values = x;
  d.mask = mask;
  d.validate();
  return d;
}

BicForm parse_bic(const std::string& s) {
  if (s == "refit") return BicForm::kRefit;
  if (s == "deviance") return BicForm::kDeviance;
  if (s == "literal") return BicForm::kLiteral;
  throw InputError("bic form must be refit, deviance or literal, got '" + s + "'");
}

py::dict truth_dict(const GroundTruth& t) {
  py::dict out;
  out["precision"] = t.precision.dense();
  out["layout"] = t.layout;
  out["edges"] = t.graph.edges();
  out["degenerate"] = t.degenerate;
  out["rho"] = t.rho;
  out["s"] = t.s;
  return out;
}

}  // namespace

PYBIND11_MODULE(_magnet, m) {
  m.doc() = "Block-sparse Gaussian graphical models for multi-attribute data.";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InputError>(m, "InputError", error.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", error.ptr());

  py::class_<AttributeLayout>(m, "Layout")
      .def(py::init<std::vector<int>>(), py::arg("attr_counts"))
      .def_static("uniform", &AttributeLayout::uniform, py::arg("nodes"), py::arg("attrs_per_node"))
      .def_property_readonly("node_count", &AttributeLayout::node_count)
      .def_property_readonly("total_dim", &AttributeLayout::total_dim)
      .def_property_readonly("attr_counts", &AttributeLayout::attr_counts)
      .def_property_readonly("offsets", &AttributeLayout::offsets)
      .def("__eq__", [](const AttributeLayout& a, const AttributeLayout& b) { return a == b; })
      .def("__repr__", [](const AttributeLayout& l) {
        std::string s = "Layout([";
        for (int a = 0; a < l.node_count(); ++a) s += (a ? ", " : "") + std::to_string(l.attr_count(a));
        return s + "])";
      });

  py::enum_<StepPolicy>(m, "StepPolicy")
      .value("adaptive", StepPolicy::kAdaptive)
      .value("persistent", StepPolicy::kPersistent);

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def_readwrite("lambda_", &SolverConfig::lambda)
      .def_readwrite("epsilon", &SolverConfig::epsilon)
      .def_readwrite("max_sweeps", &SolverConfig::max_sweeps)
      .def_readwrite("initial_step", &SolverConfig::initial_step)
      .def_readwrite("min_step", &SolverConfig::min_step)
      .def_readwrite("step_policy", &SolverConfig::step_policy)
      .def_readwrite("dual_ascent_steps", &SolverConfig::dual_ascent_steps)
      .def_readwrite("kkt_tolerance", &SolverConfig::kkt_tolerance)
      .def_readwrite("initial_omega", &SolverConfig::initial_omega)
      .def("validate", &SolverConfig::validate);

  py::class_<SolverReport>(m, "SolverReport")
      .def_property_readonly("omega", [](const SolverReport& r) { return r.omega_hat.dense(); })
      .def_property_readonly("sigma", [](const SolverReport& r) { return r.sigma_hat.dense(); })
      .def_property_readonly("edges", [](const SolverReport& r) { return Graph::from_precision(r.omega_hat).edges(); })
      .def_readonly("objective_trace", &SolverReport::objective_trace)
      .def_readonly("sweep_gaps", &SolverReport::sweep_gaps)
      .def_readonly("objective", &SolverReport::objective)
      .def_readonly("final_gap", &SolverReport::final_gap)
      .def_readonly("sweeps", &SolverReport::sweeps)
      .def_readonly("step_halvings", &SolverReport::step_halvings)
      .def_readonly("converged", &SolverReport::converged);

  m.def(
      "sample_covariance",
      [](const MatrixXd& x, const AttributeLayout& layout, std::optional<MatrixXd> mask, bool center) {
        const auto d = make_dataset(x, layout, mask);
        const auto c = d.mask ? masked_covariance(d) : sample_covariance(d, center);
        return py::make_tuple(c.s.dense(), c.n);
      },
      py::arg("x"), py::arg("layout"), py::arg("mask") = py::none(), py::arg("center") = false,
      "Second-moment matrix of the rows of x; masked pairwise form when a 0/1 mask is given. Returns (S, n).");

  m.def(
      "estimate",
      [](const MatrixXd& s, const AttributeLayout& layout, const SolverConfig& cfg, bool screened, int jobs) {
        const BlockSymMatrix sm(layout, s);
        py::gil_scoped_release release;
        return screened ? estimate_screened(sm, cfg, jobs) : estimate(sm, cfg);
      },
      py::arg("s"), py::arg("layout"), py::arg("config"), py::arg("screened") = false, py::arg("jobs") = 1);

  m.def(
      "objective",
      [](const MatrixXd& s, const MatrixXd& omega, const AttributeLayout& layout, double lambda) {
        return objective(BlockSymMatrix(layout, s), BlockSymMatrix(layout, omega), lambda);
      },
      py::arg("s"), py::arg("omega"), py::arg("layout"), py::arg("lambda_"));

  m.def(
      "kkt_residual",
      [](const MatrixXd& omega, const MatrixXd& s, const AttributeLayout& layout, double lambda) {
        return kkt_residual(BlockSymMatrix(layout, omega), BlockSymMatrix(layout, s), lambda);
      },
      py::arg("omega"), py::arg("s"), py::arg("layout"), py::arg("lambda_"));

  m.def("prox_block", &prox_block, py::arg("m"), py::arg("t"), py::arg("lambda_"));

  m.def(
      "block_norms",
      [](const MatrixXd& mat, const AttributeLayout& layout) { return MatrixXd(c_operator(BlockSymMatrix(layout, mat))); },
      py::arg("m"), py::arg("layout"), "Matrix of per-block Frobenius norms.");

  m.def(
      "screen",
      [](const MatrixXd& s, const AttributeLayout& layout, double lambda) {
        return screen(BlockSymMatrix(layout, s), lambda).components;
      },
      py::arg("s"), py::arg("layout"), py::arg("lambda_"));

  m.def(
      "lambda_grid",
      [](const MatrixXd& s, const AttributeLayout& layout, int count) {
        return lambda_grid(BlockSymMatrix(layout, s), count);
      },
      py::arg("s"), py::arg("layout"), py::arg("count") = 30);

  m.def(
      "fit_path",
      [](const MatrixXd& s, int n, const AttributeLayout& layout, std::optional<std::vector<double>> grid,
         const SolverConfig& cfg, const std::string& bic_form, bool screened) {
        CovEstimate c{BlockSymMatrix(layout, s), {}, n};
        PathOptions opts;
        opts.bic_form = parse_bic(bic_form);
        opts.screened = screened;
        const auto lambdas = grid ? *grid : lambda_grid(c.s, 30);
        PathResult path;
        {
          py::gil_scoped_release release;
          path = fit_path(c, lambdas, cfg, opts);
        }
        py::dict out;
        out["lambdas"] = path.lambdas;
        out["bic"] = path.bic;
        out["edge_counts"] = path.edge_counts;
        out["best_index"] = path.best_index;
        out["reports"] = path.reports;
        return out;
      },
      py::arg("s"), py::arg("n"), py::arg("layout"), py::arg("grid") = py::none(),
      py::arg("config") = SolverConfig{}, py::arg("bic") = "refit", py::arg("screened") = false);

  m.def(
      "bic",
      [](const MatrixXd& s, const MatrixXd& omega, int n, const AttributeLayout& layout, const std::string& form) {
        return bic(BlockSymMatrix(layout, s), BlockSymMatrix(layout, omega), n, parse_bic(form));
      },
      py::arg("s"), py::arg("omega"), py::arg("n"), py::arg("layout"), py::arg("form") = "refit");

  m.def(
      "stability_select",
      [](const MatrixXd& x, const AttributeLayout& layout, double lambda, int reps, double fraction, int threshold,
         std::uint64_t seed, int jobs, std::optional<MatrixXd> mask) {
        StabilityConfig cfg;
        cfg.reps = reps;
        cfg.fraction = fraction;
        cfg.threshold = threshold;
        cfg.seed = seed;
        cfg.jobs = jobs;
        const auto d = make_dataset(x, layout, mask);
        StabilityResult r;
        {
          py::gil_scoped_release release;
          r = stability_select(d, lambda, cfg);
        }
        py::dict out;
        out["edge_counts"] = Eigen::MatrixXi(r.edge_counts);
        out["stable_edges"] = r.stable_edges.edges();
        out["failed"] = r.failed;
        out["reps"] = r.reps;
        return out;
      },
      py::arg("x"), py::arg("layout"), py::arg("lambda_"), py::arg("reps") = 100, py::arg("fraction") = 0.8,
      py::arg("threshold") = 95, py::arg("seed") = 0, py::arg("jobs") = 1, py::arg("mask") = py::none());

  m.def(
      "interpret_edge",
      [](const MatrixXd& x, const AttributeLayout& layout, const Edges& edges, int a, int b, double ridge) {
        const auto d = make_dataset(x, layout, std::nullopt);
        const auto e = interpret_edge(d, Graph::from_edges(layout.node_count(), edges), a, b, ridge);
        py::dict out;
        out["rho"] = e.rho;
        out["w_a"] = e.w_a;
        out["w_b"] = e.w_b;
        out["degenerate"] = e.degenerate;
        return out;
      },
      py::arg("x"), py::arg("layout"), py::arg("edges"), py::arg("a"), py::arg("b"), py::arg("ridge") = 0.0);

  m.def(
      "pcc",
      [](const MatrixXd& c, int ka, int kb) {
        const auto e = pcc_eigensystem(BlockSymMatrix(AttributeLayout({ka, kb}), c));
        return py::make_tuple(e.rho, e.w_a, e.w_b);
      },
      py::arg("c"), py::arg("ka"), py::arg("kb"),
      "Partial canonical correlation of a two-node residual covariance. Returns (rho, w_a, w_b).");

  m.def(
      "gen_chain",
      [](int p, int k, std::uint64_t seed, const std::string& regime) {
        return truth_dict(gen_chain(p, k, seed, parse_regime(regime)));
      },
      py::arg("p"), py::arg("k"), py::arg("seed"), py::arg("regime") = "full");

  m.def(
      "gen_nearest_neighbor",
      [](int p, int k, std::uint64_t seed, const std::string& regime) {
        return truth_dict(gen_nearest_neighbor(p, k, seed, parse_regime(regime)));
      },
      py::arg("p"), py::arg("k"), py::arg("seed"), py::arg("regime") = "full");

  m.def(
      "sample_mvn",
      [](const MatrixXd& precision, const AttributeLayout& layout, int n, std::uint64_t seed) {
        return sample_mvn(BlockSymMatrix(layout, precision), n, seed).values;
      },
      py::arg("precision"), py::arg("layout"), py::arg("n"), py::arg("seed"));

  m.def("theta_to_n", &theta_to_n, py::arg("theta"), py::arg("s"), py::arg("k"), py::arg("p"));

  m.def(
      "hamming_distance",
      [](int p, const Edges& a, const Edges& b) {
        return hamming_distance(Graph::from_edges(p, a), Graph::from_edges(p, b));
      },
      py::arg("p"), py::arg("edges_a"), py::arg("edges_b"));

  m.def(
      "irrepresentability",
      [](const MatrixXd& omega, const AttributeLayout& layout) {
        const auto t = irrepresentability(BlockSymMatrix(layout, omega));
        py::dict out;
        out["alpha"] = t.alpha_irrep;
        out["kappa_sigma"] = t.kappa_sigma;
        out["kappa_h"] = t.kappa_h;
        out["recovery_guaranteed"] = t.recovery_guaranteed();
        return out;
      },
      py::arg("omega"), py::arg("layout"));
}
