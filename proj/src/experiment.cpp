#include "lagbem/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lagbem/fundamental.hpp"
#include "lagbem/laguerre.hpp"
#include "lagbem/nystrom.hpp"
#include "lagbem/solver.hpp"

namespace lagbem {

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::direct_neumann: return "direct-neumann";
    case ExperimentKind::direct_dirichlet: return "direct-dirichlet";
    case ExperimentKind::cauchy_stationary: return "cauchy-stationary";
    case ExperimentKind::cauchy_transient: return "cauchy-transient";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from(const std::string& name) {
  if (name == "direct-neumann") return ExperimentKind::direct_neumann;
  if (name == "direct-dirichlet") return ExperimentKind::direct_dirichlet;
  if (name == "cauchy-stationary") return ExperimentKind::cauchy_stationary;
  if (name == "cauchy-transient") return ExperimentKind::cauchy_transient;
  throw ValidationError("experiment", "unknown experiment kind '" + name + "'");
}

// Inner benchmark curve of the second example, r(s) = P(s)/Q(s) with
// P = 0.9 + 0.6 cos s - 0.2 sin 2s and Q = 2 + 1.4 cos s.
ParametricCurve<double> make_bean() {
  auto r = [](double s) { return (0.9 + 0.6 * std::cos(s) - 0.2 * std::sin(2 * s)) / (2.0 + 1.4 * std::cos(s)); };
  auto dr = [](double s) {
    const double P = 0.9 + 0.6 * std::cos(s) - 0.2 * std::sin(2 * s);
    const double Pp = -0.6 * std::sin(s) - 0.4 * std::cos(2 * s);
    const double Q = 2.0 + 1.4 * std::cos(s);
    const double Qp = -1.4 * std::sin(s);
    return (Pp * Q - P * Qp) / (Q * Q);
  };
  auto ddr = [](double s) {
    const double P = 0.9 + 0.6 * std::cos(s) - 0.2 * std::sin(2 * s);
    const double Pp = -0.6 * std::sin(s) - 0.4 * std::cos(2 * s);
    const double Ppp = -0.6 * std::cos(s) + 0.8 * std::sin(2 * s);
    const double Q = 2.0 + 1.4 * std::cos(s);
    const double Qp = -1.4 * std::sin(s);
    const double Qpp = -1.4 * std::cos(s);
    return (Ppp * Q * Q - P * Qpp * Q - 2.0 * Pp * Qp * Q + 2.0 * P * Qp * Qp) / (Q * Q * Q);
  };
  return make_radial<double>(r, dr, ddr);
}

ParametricCurve<double> make_named_curve(const CurveSpec& spec) {
  if (spec.shape == "kite") return make_kite<double>();
  if (spec.shape == "bean") return make_bean();
  if (spec.shape == "circle") {
    if (!(spec.radius > 0.0)) throw ValidationError("gamma", "circle radius must be positive");
    return make_circle<double>(Vec2<double>(spec.cx, spec.cy), spec.radius);
  }
  throw ValidationError("gamma", "unknown curve shape '" + spec.shape + "'");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& tok) {
  try {
    size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(key, "expected a number, got '" + tok + "'");
  }
}

long long parse_int(const std::string& key, const std::string& tok) {
  try {
    size_t used = 0;
    const long long v = std::stoll(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(key, "expected an integer, got '" + tok + "'");
  }
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

Vec2<double> parse_point(const std::string& key, const std::string& value) {
  const auto toks = split_ws(value);
  if (toks.size() != 2) throw ValidationError(key, "expected two coordinates");
  return {parse_double(key, toks[0]), parse_double(key, toks[1])};
}

CurveSpec parse_curve(const std::string& key, const std::string& value) {
  const auto toks = split_ws(value);
  if (toks.empty()) throw ValidationError(key, "empty curve specification");
  CurveSpec spec;
  spec.shape = toks[0];
  if (spec.shape == "circle") {
    if (toks.size() != 4) throw ValidationError(key, "circle needs 'circle cx cy radius'");
    spec.cx = parse_double(key, toks[1]);
    spec.cy = parse_double(key, toks[2]);
    spec.radius = parse_double(key, toks[3]);
  } else if (toks.size() != 1) {
    throw ValidationError(key, "'" + spec.shape + "' takes no parameters");
  }
  return spec;
}

// Winding-number containment test against a dense polygonal sampling of the
// curve; valid for points away from the curve itself.
bool point_inside(const ParametricCurve<double>& curve, const Vec2<double>& p) {
  constexpr int kSamples = 512;
  int winding = 0;
  Vec2<double> prev = curve.point(0.0) - p;
  for (int i = 1; i <= kSamples; ++i) {
    const double s = 2.0 * M_PI * i / kSamples;
    const Vec2<double> cur = curve.point(s) - p;
    if (prev.y() <= 0.0 && cur.y() > 0.0 && prev.x() * cur.y() - prev.y() * cur.x() > 0.0) ++winding;
    if (prev.y() > 0.0 && cur.y() <= 0.0 && prev.x() * cur.y() - prev.y() * cur.x() < 0.0) --winding;
    prev = cur;
  }
  return winding != 0;
}

bool inside_annulus(const ExperimentConfig& cfg, const Vec2<double>& p) {
  return point_inside(make_named_curve(cfg.gamma2), p) && !point_inside(make_named_curve(cfg.gamma1), p);
}

MatX<double> to_nodal(const VecX<double>& v) {
  MatX<double> out(v.size() / 2, 2);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    out(i, 0) = v(2 * i);
    out(i, 1) = v(2 * i + 1);
  }
  return out;
}

VecX<double> from_nodal(const MatX<double>& m) {
  VecX<double> out(2 * m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out(2 * i) = m(i, 0);
    out(2 * i + 1) = m(i, 1);
  }
  return out;
}

int snap_node(const CurveNodes<double>& nd, const Vec2<double>& p, const char* what) {
  int best = 0;
  double best_d = (nd.x[0] - p).norm();
  for (size_t i = 1; i < nd.x.size(); ++i) {
    const double d = (nd.x[i] - p).norm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  if (best_d > 1e-6 * (1.0 + p.norm()))
    std::cerr << what << ": point is " << best_d << " away from the nearest quadrature node; using node " << best
              << "\n";
  return best;
}

struct Workspace {
  ExperimentConfig cfg;
  MaterialParams<double> params;
  AnnulusGeometry<double> geom;
  NystromGrid<double> grid;
  CurveNodes<double> nd1, nd2;
  MaterialTables<double> mt;

  explicit Workspace(const ExperimentConfig& c)
      : cfg(c),
        params(c.material()),
        geom{make_named_curve(c.gamma1), make_named_curve(c.gamma2)},
        grid(NystromGrid<double>::make(c.M)),
        nd1(curve_nodes(geom.gamma1, grid)),
        nd2(curve_nodes(geom.gamma2, grid)),
        mt(MaterialTables<double>::make(params, c.N - 1)) {}
};

// First columns of E_n and of its traction: exact displacement and traction
// traces of the field radiated by a unit point source at z1.
MatX<double> exact_trace(const Workspace& w, const CurveNodes<double>& nd, int n, const Vec2<double>& z1) {
  MatX<double> out(static_cast<Eigen::Index>(nd.x.size()), 2);
  for (size_t i = 0; i < nd.x.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = fundamental_matrix(n, nd.x[i], z1, w.mt).full.col(0).transpose();
  return out;
}

MatX<double> exact_traction(const Workspace& w, const CurveNodes<double>& nd, int n, const Vec2<double>& z1,
                            bool flip) {
  MatX<double> out(static_cast<Eigen::Index>(nd.x.size()), 2);
  for (size_t i = 0; i < nd.x.size(); ++i) {
    const Vec2<double> nu = flip ? Vec2<double>(-nd.nu[i]) : nd.nu[i];
    out.row(static_cast<Eigen::Index>(i)) = traction_matrix(n, nd.x[i], z1, nu, w.mt).full.col(0).transpose();
  }
  return out;
}

double relative_error(const MatX<double>& got, const MatX<double>& want) {
  const double denom = want.norm();
  if (denom == 0.0) return got.norm() == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return (got - want).norm() / denom;
}

ResultRow base_row(const ExperimentConfig& cfg, double n_or_t, int component, double computed) {
  ResultRow row;
  row.experiment = to_string(cfg.kind);
  row.n_or_t = n_or_t;
  row.M = cfg.M;
  row.kappa = cfg.kappa;
  row.alpha = cfg.alpha;
  row.delta = cfg.delta;
  row.seed = cfg.seed;
  row.component = component;
  row.computed = computed;
  return row;
}

void push_value_rows(std::vector<ResultRow>& rows, const ExperimentConfig& cfg, double n_or_t, int comp0,
                     const Vec2<double>& computed, const std::optional<Vec2<double>>& exact) {
  for (int c = 0; c < 2; ++c) {
    ResultRow row = base_row(cfg, n_or_t, comp0 + c, computed(c));
    if (exact) {
      row.exact = (*exact)(c);
      row.error = computed(c) - (*exact)(c);
    }
    rows.push_back(row);
  }
}

RunResult run_direct(const Workspace& w) {
  const ExperimentConfig& cfg = w.cfg;
  const int N = cfg.N;
  const bool neumann = cfg.kind == ExperimentKind::direct_neumann;

  std::vector<VecX<double>> data;
  data.reserve(static_cast<size_t>(N));
  std::vector<MatX<double>> f2_given;  // prescribed outer trace (Dirichlet runs)
  std::vector<double> signal;
  if (cfg.data_source == "test-signal") signal = test_signal_coeffs<double>(N, cfg.kappa);
  for (int n = 0; n < N; ++n) {
    VecX<double> d(8 * cfg.M);
    if (neumann) {
      d << from_nodal(exact_traction(w, w.nd1, n, *cfg.source_point, false)),
          from_nodal(exact_traction(w, w.nd2, n, *cfg.source_point, false));
    } else if (cfg.data_source == "test-signal") {
      d.head(4 * cfg.M).setConstant(signal[static_cast<size_t>(n)]);
      d.tail(4 * cfg.M).setZero();
      f2_given.push_back(MatX<double>::Zero(2 * cfg.M, 2));
    } else {
      const MatX<double> f2 = exact_trace(w, w.nd2, n, *cfg.source_point);
      d << from_nodal(exact_trace(w, w.nd1, n, *cfg.source_point)), from_nodal(f2);
      f2_given.push_back(f2);
    }
    data.push_back(std::move(d));
  }

  const DiscreteSystem<double> sys = neumann ? assemble_direct_neumann(w.geom, w.grid, w.mt, N - 1)
                                             : assemble_direct_dirichlet(w.geom, w.grid, w.mt, N - 1);
  const TikhonovConfig<double> tik{cfg.alpha, cfg.rank_tol, cfg.bandwidth};
  const DensitySet<double> densities = solve_sequence(sys, data, tik);

  RunResult result;
  if (neumann) {
    for (int n = 0; n < N; ++n) {
      const Vec2<double> u = interior_eval(n, *cfg.eval_point, densities, w.geom, w.grid, w.mt);
      const Vec2<double> exact = fundamental_matrix(n, *cfg.eval_point, *cfg.source_point, w.mt).full.col(0);
      push_value_rows(result.rows, cfg, n, 1, u, exact);
    }
    return result;
  }

  // Dirichlet runs exist to manufacture Cauchy data: extract the traction on
  // the outer curve and optionally persist (f2, g2) for a later inversion.
  const BoundaryOperator<double> tract2 = traction_operator(2, false, 1.0, w.geom, w.grid, w.mt, N - 1);
  CauchyData out;
  out.M = cfg.M;
  out.kappa = cfg.kappa;
  for (int n = 0; n < N; ++n) {
    out.f2.push_back(f2_given[static_cast<size_t>(n)]);
    out.g2.push_back(to_nodal(tract2.apply(n, densities)));
  }
  if (!cfg.data_out.empty()) save_cauchy_data(cfg.data_out, out);

  const int node = cfg.trace_point ? snap_node(w.nd2, *cfg.trace_point, "trace_point") : 0;
  std::vector<MatX<double>> gex;
  if (cfg.data_source == "fundamental")
    for (int n = 0; n < N; ++n) gex.push_back(exact_traction(w, w.nd2, n, *cfg.source_point, false));
  for (int n = 0; n < N; ++n) {
    const Vec2<double> g = out.g2[static_cast<size_t>(n)].row(node);
    std::optional<Vec2<double>> exact;
    if (!gex.empty()) exact = Vec2<double>(gex[static_cast<size_t>(n)].row(node));
    push_value_rows(result.rows, cfg, n, 3, g, exact);
    if (!gex.empty()) {
      ResultRow row = base_row(cfg, n, 6, relative_error(out.g2[static_cast<size_t>(n)], gex[static_cast<size_t>(n)]));
      result.rows.push_back(row);
    }
  }
  return result;
}

RunResult run_cauchy(const Workspace& w) {
  const ExperimentConfig& cfg = w.cfg;
  const int N = cfg.N;

  CauchyData data;
  int n_ref = N;  // truncation order of the exact reference
  if (cfg.data_source == "file") {
    const CauchyData fine = load_cauchy_data(cfg.data_in);
    if (std::abs(fine.kappa - cfg.kappa) > 1e-12)
      throw ValidationError("kappa", "data file was generated with kappa = " + format_number(fine.kappa));
    if (fine.orders() < N) throw ValidationError("N", "data file provides fewer orders than requested");
    data = subsample(fine, cfg.M);
    n_ref = fine.orders();
  } else {
    data.M = cfg.M;
    data.kappa = cfg.kappa;
    for (int n = 0; n < N; ++n) {
      data.f2.push_back(exact_trace(w, w.nd2, n, *cfg.source_point));
      data.g2.push_back(exact_traction(w, w.nd2, n, *cfg.source_point, false));
    }
  }

  GaussianSampler<double> rng(cfg.seed);
  std::vector<VecX<double>> rhs;
  rhs.reserve(static_cast<size_t>(N));
  for (int n = 0; n < N; ++n) {
    VecX<double> g = from_nodal(data.g2[static_cast<size_t>(n)]);
    if (cfg.delta > 0.0) g = add_noise(g, cfg.delta, rng);
    VecX<double> d(8 * cfg.M);
    d << from_nodal(data.f2[static_cast<size_t>(n)]), g;
    rhs.push_back(std::move(d));
  }

  const DiscreteSystem<double> sys = assemble_cauchy(w.geom, w.grid, w.mt, N - 1);
  const TikhonovConfig<double> tik{cfg.alpha, cfg.rank_tol, cfg.bandwidth};
  const DensitySet<double> densities = solve_sequence(sys, rhs, tik);

  const BoundaryOperator<double> trace1 = trace_operator(1, w.geom, w.grid, w.mt, N - 1);
  const BoundaryOperator<double> tract1 = traction_operator(1, true, 1.0, w.geom, w.grid, w.mt, N - 1);
  std::vector<MatX<double>> f1, g1;
  for (int n = 0; n < N; ++n) {
    f1.push_back(to_nodal(trace1.apply(n, densities)));
    g1.push_back(to_nodal(tract1.apply(n, densities)));
  }

  // Reference traces on the inner curve: the point-source field for
  // manufactured data, the prescribed signal (same value in both components
  // at every node) for file data.
  std::vector<MatX<double>> fex, gex;
  std::vector<double> signal;
  if (cfg.data_source == "fundamental") {
    for (int n = 0; n < N; ++n) {
      fex.push_back(exact_trace(w, w.nd1, n, *cfg.source_point));
      gex.push_back(exact_traction(w, w.nd1, n, *cfg.source_point, true));
    }
  } else {
    signal = test_signal_coeffs<double>(n_ref, cfg.kappa);
    for (int n = 0; n < N; ++n)
      fex.push_back(MatX<double>::Constant(2 * cfg.M, 2, signal[static_cast<size_t>(n)]));
  }

  RunResult result;
  if (cfg.kind == ExperimentKind::cauchy_stationary) {
    const int node = cfg.trace_point ? snap_node(w.nd1, *cfg.trace_point, "trace_point") : 0;
    for (int n = 0; n < N; ++n) {
      const size_t un = static_cast<size_t>(n);
      std::optional<Vec2<double>> fx, gx;
      if (!fex.empty()) fx = Vec2<double>(fex[un].row(node));
      if (!gex.empty()) gx = Vec2<double>(gex[un].row(node));
      push_value_rows(result.rows, cfg, n, 1, Vec2<double>(f1[un].row(node)), fx);
      push_value_rows(result.rows, cfg, n, 3, Vec2<double>(g1[un].row(node)), gx);
      if (!fex.empty()) result.rows.push_back(base_row(cfg, n, 5, relative_error(f1[un], fex[un])));
      if (!gex.empty()) result.rows.push_back(base_row(cfg, n, 6, relative_error(g1[un], gex[un])));
    }
    return result;
  }

  // Transient synthesis. Point values at the requested times, plus the
  // relative space-time error over the whole inner curve when a reference is
  // available (trapezoidal rule in time, plain node sums along the curve).
  const double kp = cfg.kappa;
  if (cfg.eval_point) {
    std::vector<Vec2<double>> un(static_cast<size_t>(N), Vec2<double>::Zero());
    std::vector<Vec2<double>> ex(static_cast<size_t>(N), Vec2<double>::Zero());
    for (int n = 0; n < N; ++n) {
      un[static_cast<size_t>(n)] = interior_eval(n, *cfg.eval_point, densities, w.geom, w.grid, w.mt);
      if (cfg.data_source == "fundamental")
        ex[static_cast<size_t>(n)] = fundamental_matrix(n, *cfg.eval_point, *cfg.source_point, w.mt).full.col(0);
    }
    const LaguerreSeries<double, Vec2<double>> series{kp, un};
    const LaguerreSeries<double, Vec2<double>> exact_series{kp, ex};
    for (double t : cfg.times) {
      std::optional<Vec2<double>> exact;
      if (cfg.data_source == "fundamental") exact = synthesize(exact_series, t);
      push_value_rows(result.rows, cfg, t, 1, synthesize(series, t), exact);
    }
  }
  if (cfg.trace_point) {
    const int node = snap_node(w.nd1, *cfg.trace_point, "trace_point");
    std::vector<Vec2<double>> un(static_cast<size_t>(N), Vec2<double>::Zero());
    for (int n = 0; n < N; ++n) un[static_cast<size_t>(n)] = f1[static_cast<size_t>(n)].row(node);
    const LaguerreSeries<double, Vec2<double>> series{kp, un};
    const LaguerreSeries<double> ref_series{kp, signal};
    std::vector<Vec2<double>> exn(static_cast<size_t>(N), Vec2<double>::Zero());
    if (cfg.data_source == "fundamental")
      for (int n = 0; n < N; ++n) exn[static_cast<size_t>(n)] = fex[static_cast<size_t>(n)].row(node);
    const LaguerreSeries<double, Vec2<double>> exact_series{kp, exn};
    for (double t : cfg.times) {
      std::optional<Vec2<double>> exact;
      if (cfg.data_source == "file")
        exact = Vec2<double>::Constant(synthesize(ref_series, t));
      else
        exact = synthesize(exact_series, t);
      push_value_rows(result.rows, cfg, t, 1, synthesize(series, t), exact);
    }
  }
  if (!fex.empty()) {
    const int steps = static_cast<int>(std::lround(cfg.time_horizon / cfg.time_step));
    double num = 0.0, den = 0.0;
    for (int it = 0; it <= steps; ++it) {
      const double t = it * cfg.time_step;
      const double wq = (it == 0 || it == steps) ? 0.5 : 1.0;
      const std::vector<double> lag_n = laguerre_all(N, kp * t);
      MatX<double> ut = MatX<double>::Zero(2 * cfg.M, 2);
      for (int n = 0; n < N; ++n) ut += lag_n[static_cast<size_t>(n)] * f1[static_cast<size_t>(n)];
      MatX<double> rt = MatX<double>::Zero(2 * cfg.M, 2);
      if (cfg.data_source == "file") {
        const std::vector<double> lag_ref = laguerre_all(n_ref, kp * t);
        double ft = 0.0;
        for (int n = 0; n < n_ref; ++n) ft += signal[static_cast<size_t>(n)] * lag_ref[static_cast<size_t>(n)];
        rt.setConstant(ft);
      } else {
        for (int n = 0; n < N; ++n) rt += lag_n[static_cast<size_t>(n)] * fex[static_cast<size_t>(n)];
      }
      num += wq * (kp * ut - kp * rt).squaredNorm();
      den += wq * (kp * rt).squaredNorm();
    }
    result.rows.push_back(base_row(cfg, cfg.time_horizon, 5, std::sqrt(num / den)));
  }
  return result;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const Workspace w(cfg);
  switch (cfg.kind) {
    case ExperimentKind::direct_neumann:
    case ExperimentKind::direct_dirichlet: return run_direct(w);
    case ExperimentKind::cauchy_stationary:
    case ExperimentKind::cauchy_transient: return run_cauchy(w);
  }
  throw ValidationError("experiment", "unhandled experiment kind");
}

SweepResult run_sweep(const ExperimentConfig& base, const std::vector<int>& grid_sizes) {
  if (grid_sizes.empty()) throw ValidationError("M", "sweep needs at least one grid size");
  SweepResult sweep;
  for (int M : grid_sizes) {
    ExperimentConfig cfg = base;
    cfg.M = M;
    const RunResult run = run_experiment(cfg);
    double sq = 0.0;
    bool any = false;
    for (const ResultRow& row : run.rows) {
      if (row.error && (row.component == 1 || row.component == 2)) {
        sq += *row.error * *row.error;
        any = true;
      }
    }
    if (!any) throw ValidationError("sweep", "configuration produces no reference errors to track");
    sweep.plot.emplace_back(M, std::log10(std::max(std::sqrt(sq), 1e-300)));
    sweep.rows.insert(sweep.rows.end(), run.rows.begin(), run.rows.end());
  }
  return sweep;
}

ExperimentConfig parse_config(std::istream& in, const std::string& path) {
  ExperimentConfig cfg;
  cfg.config_path = path;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config", path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (value.empty()) throw ValidationError(key, "empty value");

    if (key == "experiment") cfg.kind = experiment_kind_from(value);
    else if (key == "gamma1") cfg.gamma1 = parse_curve(key, value);
    else if (key == "gamma2") cfg.gamma2 = parse_curve(key, value);
    else if (key == "lambda") cfg.lambda = parse_double(key, value);
    else if (key == "mu") cfg.mu = parse_double(key, value);
    else if (key == "rho") cfg.rho = parse_double(key, value);
    else if (key == "kappa") cfg.kappa = parse_double(key, value);
    else if (key == "M") cfg.M = static_cast<int>(parse_int(key, value));
    else if (key == "N") cfg.N = static_cast<int>(parse_int(key, value));
    else if (key == "alpha") cfg.alpha = parse_double(key, value);
    else if (key == "rank_tol") cfg.rank_tol = parse_double(key, value);
    else if (key == "bandwidth") cfg.bandwidth = static_cast<int>(parse_int(key, value));
    else if (key == "delta") cfg.delta = parse_double(key, value);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "source_point") cfg.source_point = parse_point(key, value);
    else if (key == "eval_point") cfg.eval_point = parse_point(key, value);
    else if (key == "trace_point") cfg.trace_point = parse_point(key, value);
    else if (key == "times") {
      cfg.times.clear();
      for (const std::string& tok : split_ws(value)) cfg.times.push_back(parse_double(key, tok));
    } else if (key == "time_horizon") cfg.time_horizon = parse_double(key, value);
    else if (key == "time_step") cfg.time_step = parse_double(key, value);
    else if (key == "data_source") cfg.data_source = value;
    else if (key == "data_in") cfg.data_in = value;
    else if (key == "data_out") cfg.data_out = value;
    else if (key == "output") cfg.output = value;
    else throw ValidationError(key, "unknown configuration key");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config", "cannot open '" + path + "'");
  return parse_config(in, path);
}

void validate(const ExperimentConfig& cfg) {
  (void)cfg.material();  // positivity of the material constants
  if (cfg.M < 2) throw ValidationError("M", "need at least 2 nodes per half-period");
  if (cfg.N < 1) throw ValidationError("N", "need at least one expansion order");
  if (cfg.alpha < 0.0) throw ValidationError("alpha", "must be non-negative");
  if (cfg.rank_tol < 0.0 || cfg.rank_tol >= 1.0) throw ValidationError("rank_tol", "must lie in [0, 1)");
  if (cfg.bandwidth < 0) throw ValidationError("bandwidth", "must be non-negative");
  if (cfg.delta < 0.0) throw ValidationError("delta", "must be non-negative");
  if (!(cfg.time_step > 0.0)) throw ValidationError("time_step", "must be positive");
  if (!(cfg.time_horizon >= cfg.time_step)) throw ValidationError("time_horizon", "must cover at least one step");
  for (double t : cfg.times)
    if (t < 0.0) throw ValidationError("times", "must be non-negative");

  const ParametricCurve<double> c1 = make_named_curve(cfg.gamma1);
  const ParametricCurve<double> c2 = make_named_curve(cfg.gamma2);
  constexpr int kSamples = 64;
  for (int i = 0; i < kSamples; ++i) {
    const double s = 2.0 * M_PI * i / kSamples;
    if (!point_inside(c2, c1.point(s)))
      throw ValidationError("gamma1", "inner curve is not contained in the outer curve");
    if (point_inside(c1, c2.point(s)))
      throw ValidationError("gamma2", "outer curve crosses into the inner curve");
  }

  const bool is_direct =
      cfg.kind == ExperimentKind::direct_neumann || cfg.kind == ExperimentKind::direct_dirichlet;
  if (is_direct && cfg.delta > 0.0)
    throw ValidationError("delta", "noise applies to the Cauchy inversion, not the direct solves");

  const bool needs_source = cfg.data_source == "fundamental" || cfg.kind == ExperimentKind::direct_neumann;
  if (cfg.kind == ExperimentKind::direct_neumann && cfg.data_source != "fundamental")
    throw ValidationError("data_source", "the traction-data solve is verified against 'fundamental' only");
  if (cfg.kind == ExperimentKind::direct_dirichlet && cfg.data_source == "file")
    throw ValidationError("data_source", "the data-generation solve cannot itself read a data file");
  if (cfg.data_source != "fundamental" && cfg.data_source != "test-signal" && cfg.data_source != "file")
    throw ValidationError("data_source", "expected fundamental, test-signal, or file");
  if ((cfg.kind == ExperimentKind::cauchy_stationary || cfg.kind == ExperimentKind::cauchy_transient) &&
      cfg.data_source == "test-signal")
    throw ValidationError("data_source", "inversions take manufactured ('fundamental') or recorded ('file') data");

  if (needs_source) {
    if (!cfg.source_point) throw ValidationError("source_point", "required for fundamental-solution data");
    if (inside_annulus(cfg, *cfg.source_point))
      throw ValidationError("source_point", "must lie outside the annulus for the field to solve the equation");
  }
  if (cfg.data_source == "file" && cfg.data_in.empty())
    throw ValidationError("data_in", "required when data_source = file");

  if (cfg.kind == ExperimentKind::direct_neumann) {
    if (!cfg.eval_point) throw ValidationError("eval_point", "required for the interior verification");
  }
  if (cfg.kind == ExperimentKind::cauchy_transient) {
    if (!cfg.eval_point && !cfg.trace_point)
      throw ValidationError("eval_point", "transient runs need an eval_point or a trace_point");
    if (cfg.times.empty()) throw ValidationError("times", "transient runs need at least one report time");
  }
  if (cfg.eval_point && !inside_annulus(cfg, *cfg.eval_point))
    throw ValidationError("eval_point", "must lie inside the annulus");
}

std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::string csv_optional(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void write_csv(std::ostream& out, const ExperimentConfig& cfg, const std::vector<ResultRow>& rows) {
  out << "# artifact-run " << utc_timestamp() << "\n";
  out << "# config " << (cfg.config_path.empty() ? "-" : cfg.config_path) << " seed " << cfg.seed
      << " rng mt19937_64+box-muller\n";
  out << "experiment,n_or_t,M,kappa,alpha,delta,seed,component,computed,exact,error\n";
  for (const ResultRow& r : rows) {
    out << r.experiment << ',' << format_number(r.n_or_t) << ',' << r.M << ',' << format_number(r.kappa) << ','
        << format_number(r.alpha) << ',' << format_number(r.delta) << ',' << r.seed << ',' << r.component << ','
        << format_number(r.computed) << ',' << csv_optional(r.exact) << ',' << csv_optional(r.error) << "\n";
  }
}

void write_output(const ExperimentConfig& cfg, const std::vector<ResultRow>& rows) {
  if (cfg.output.empty()) {
    write_csv(std::cout, cfg, rows);
    return;
  }
  std::ofstream out(cfg.output);
  if (!out) throw ValidationError("output", "cannot open '" + cfg.output + "' for writing");
  write_csv(out, cfg, rows);
}

void write_plot_data(const std::string& path, const SweepResult& sweep) {
  std::ofstream out(path);
  if (!out) throw ValidationError("emit-plot-data", "cannot open '" + path + "' for writing");
  out << "# M log10_error\n";
  for (const auto& [M, v] : sweep.plot) out << M << ' ' << format_number(v) << "\n";
}

void write_cauchy_data(std::ostream& out, const CauchyData& data) {
  out << "# cauchy-data\n";
  out << "M " << data.M << "\n";
  out << "N " << data.orders() << "\n";
  out << "kappa " << format_number(data.kappa) << "\n";
  for (int n = 0; n < data.orders(); ++n) {
    out << "order " << n << "\n";
    const MatX<double>& f = data.f2[static_cast<size_t>(n)];
    const MatX<double>& g = data.g2[static_cast<size_t>(n)];
    for (Eigen::Index i = 0; i < f.rows(); ++i)
      out << format_number(f(i, 0)) << ' ' << format_number(f(i, 1)) << ' ' << format_number(g(i, 0)) << ' '
          << format_number(g(i, 1)) << "\n";
  }
}

CauchyData read_cauchy_data(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "# cauchy-data")
    throw ValidationError("data_in", "not a cauchy-data file (missing header)");
  CauchyData data;
  int n_orders = 0;
  std::string key;
  in >> key;
  if (key != "M" || !(in >> data.M) || data.M < 2) throw ValidationError("data_in", "bad grid size record");
  in >> key;
  if (key != "N" || !(in >> n_orders) || n_orders < 1) throw ValidationError("data_in", "bad order-count record");
  in >> key;
  if (key != "kappa" || !(in >> data.kappa) || !(data.kappa > 0.0))
    throw ValidationError("data_in", "bad kappa record");
  for (int n = 0; n < n_orders; ++n) {
    int got = -1;
    in >> key >> got;
    if (!in || key != "order" || got != n) throw ValidationError("data_in", "bad order marker");
    MatX<double> f(2 * data.M, 2), g(2 * data.M, 2);
    for (Eigen::Index i = 0; i < f.rows(); ++i)
      if (!(in >> f(i, 0) >> f(i, 1) >> g(i, 0) >> g(i, 1)))
        throw ValidationError("data_in", "truncated data block");
    data.f2.push_back(std::move(f));
    data.g2.push_back(std::move(g));
  }
  return data;
}

void save_cauchy_data(const std::string& path, const CauchyData& data) {
  std::ofstream out(path);
  if (!out) throw ValidationError("data_out", "cannot open '" + path + "' for writing");
  write_cauchy_data(out, data);
}

CauchyData load_cauchy_data(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("data_in", "cannot open '" + path + "'");
  return read_cauchy_data(in);
}

CauchyData subsample(const CauchyData& fine, int M) {
  if (M < 2) throw ValidationError("M", "need at least 2 nodes per half-period");
  if (fine.M % M != 0)
    throw ValidationError("M", "inversion grid must divide the data grid (" + std::to_string(fine.M) + ")");
  const int stride = fine.M / M;
  if (stride == 1) return fine;
  CauchyData coarse;
  coarse.M = M;
  coarse.kappa = fine.kappa;
  for (int n = 0; n < fine.orders(); ++n) {
    MatX<double> f(2 * M, 2), g(2 * M, 2);
    for (int i = 0; i < 2 * M; ++i) {
      f.row(i) = fine.f2[static_cast<size_t>(n)].row(i * stride);
      g.row(i) = fine.g2[static_cast<size_t>(n)].row(i * stride);
    }
    coarse.f2.push_back(std::move(f));
    coarse.g2.push_back(std::move(g));
  }
  return coarse;
}

}  // namespace lagbem
