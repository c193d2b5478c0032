#pragma once

// Experiment driver: plain-text configs in, CSV rows out. Four experiment
// kinds cover the benchmark set: the two direct solves verified against the
// fundamental solution, the data-completion (Cauchy) reconstruction, and its
// time-domain synthesis. Cauchy data can also be exported/imported through a
// small text format so data generated on a fine grid drives a coarse
// inversion without committing an inverse crime.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lagbem/geometry.hpp"
#include "lagbem/types.hpp"

namespace lagbem {

enum class ExperimentKind {
  direct_neumann,     // traction data on both curves, interior verification
  direct_dirichlet,   // displacement data on both curves, Cauchy-data export
  cauchy_stationary,  // per-order reconstruction of f1/g1 on the inner curve
  cauchy_transient,   // reconstruction synthesized back into the time domain
};

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from(const std::string& name);

// Boundary curve selector: "kite" and "bean" are the two benchmark shapes,
// "circle cx cy r" is parametric.
struct CurveSpec {
  std::string shape = "circle";
  double cx = 0.0, cy = 0.0, radius = 1.0;
};

ParametricCurve<double> make_named_curve(const CurveSpec& spec);
ParametricCurve<double> make_bean();

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::direct_neumann;
  CurveSpec gamma1{"kite", 0.0, 0.0, 1.0};
  CurveSpec gamma2{"circle", 0.0, 0.0, 2.0};
  double lambda = 2.0, mu = 1.0, rho = 1.0, kappa = 1.0;
  int M = 32;
  int N = 1;  // orders marched: 0 .. N-1
  double alpha = 0.0;
  double rank_tol = 0.0;
  int bandwidth = 0;
  double delta = 0.0;
  std::uint64_t seed = 1;
  std::optional<Vec2<double>> source_point;  // z1 driving fundamental-solution data
  std::optional<Vec2<double>> eval_point;    // interior measurement point z2
  std::optional<Vec2<double>> trace_point;   // measurement point on the inner curve
  std::vector<double> times;                 // report times for transient runs
  double time_horizon = 3.0;
  double time_step = 0.2;
  std::string data_source = "fundamental";  // fundamental | test-signal | file
  std::string data_in;
  std::string data_out;
  std::string output;       // CSV destination; empty = stdout
  std::string config_path;  // provenance for the CSV metadata line

  MaterialParams<double> material() const { return {lambda, mu, rho, kappa}; }
};

ExperimentConfig parse_config(std::istream& in, const std::string& path);
ExperimentConfig load_config(const std::string& path);
void validate(const ExperimentConfig& cfg);

// One CSV row. `exact`/`error` stay empty when no reference value exists.
// Component codes: 1,2 = displacement, 3,4 = traction, 5 = relative
// displacement error (e_f, or the transient error e), 6 = relative traction
// error (e_g).
struct ResultRow {
  std::string experiment;
  double n_or_t = 0.0;  // expansion order or report time
  int M = 0;
  double kappa = 0.0, alpha = 0.0, delta = 0.0;
  std::uint64_t seed = 0;
  int component = 0;
  double computed = 0.0;
  std::optional<double> exact;
  std::optional<double> error;
};

struct RunResult {
  std::vector<ResultRow> rows;
};

RunResult run_experiment(const ExperimentConfig& cfg);

// Grid-refinement sweep over M for the direct examples; `plot` holds
// (M, log10 of the l2 interior error over all orders and components).
struct SweepResult {
  std::vector<ResultRow> rows;
  std::vector<std::pair<int, double>> plot;
};

SweepResult run_sweep(const ExperimentConfig& base, const std::vector<int>& grid_sizes);

// Shortest decimal that round-trips the double.
std::string format_number(double v);

void write_csv(std::ostream& out, const ExperimentConfig& cfg, const std::vector<ResultRow>& rows);
void write_output(const ExperimentConfig& cfg, const std::vector<ResultRow>& rows);
void write_plot_data(const std::string& path, const SweepResult& sweep);

// Nodal Cauchy data on the outer curve, one (2M x 2) displacement and
// traction block per order.
struct CauchyData {
  int M = 0;
  double kappa = 1.0;
  std::vector<MatX<double>> f2, g2;

  int orders() const { return static_cast<int>(f2.size()); }
};

void write_cauchy_data(std::ostream& out, const CauchyData& data);
CauchyData read_cauchy_data(std::istream& in);
void save_cauchy_data(const std::string& path, const CauchyData& data);
CauchyData load_cauchy_data(const std::string& path);

// Restrict fine-grid data to every (M_fine/M)-th node; M must divide M_fine.
CauchyData subsample(const CauchyData& fine, int M);

}  // namespace lagbem
