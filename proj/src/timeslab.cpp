#include "biot/timeslab.hpp"

#include "biot/errors.hpp"
#include "biot/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <complex>
#include <iomanip>
#include <ostream>

namespace biot {

std::string to_string(TimeScheme scheme) { return scheme == TimeScheme::dG ? "dG" : "cG"; }

void SchemeConfig::validate() const {
  if (scheme == TimeScheme::dG && k < 0) throw InvalidArgument("dG requires k >= 0");
  if (scheme == TimeScheme::cG && k < 1) throw InvalidArgument("cG requires k >= 1");
  if (n_slabs < 1) throw InvalidArgument("number of slabs must be positive");
  if (!(T > 0.0)) throw InvalidArgument("final time must be positive");
}

TemporalDiscretization dg_discretization(int k) {
  if (k < 0) throw InvalidArgument("dG requires k >= 0");
  const QuadRule gr = gauss_radau_right(k + 1);
  const LagrangeBasis1D basis(gr.points);
  const int n = k + 1;
  TemporalDiscretization td;
  td.scheme = TimeScheme::dG;
  td.k = k;
  td.trial_nodes = gr.points;
  td.first_unknown = 0;
  td.D.resize(n, n);
  td.W_hat = Eigen::MatrixXd::Zero(n, n);
  td.d0.resize(n);
  td.w0_hat = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    const double ai = basis.value(i, -1.0);
    td.d0[i] = -ai;
    td.W_hat(i, i) = gr.weights[i];
    for (int j = 0; j < n; ++j) {
      td.D(i, j) = gr.weights[i] * basis.derivative(j, gr.points[i]) + ai * basis.value(j, -1.0);
    }
  }
  td.load_nodes = gr.points;
  td.L_hat = td.W_hat;
  return td;
}

TemporalDiscretization cg_discretization(int k) {
  if (k < 1) throw InvalidArgument("cG requires k >= 1");
  const QuadRule gl = gauss_lobatto(k + 1);
  const LagrangeBasis1D trial(gl.points);
  const LagrangeBasis1D test(std::vector<double>(gl.points.begin() + 1, gl.points.end()));
  TemporalDiscretization td;
  td.scheme = TimeScheme::cG;
  td.k = k;
  td.trial_nodes = gl.points;
  td.first_unknown = 1;
  Eigen::MatrixXd Dc = Eigen::MatrixXd::Zero(k, k + 1);
  Eigen::MatrixXd Wc = Eigen::MatrixXd::Zero(k, k + 1);
  for (int i = 0; i < k; ++i) {
    for (int mu = 0; mu <= k; ++mu) {
      const double psi = test.value(i, gl.points[mu]);
      Wc(i, mu) = gl.weights[mu] * psi;
      for (int j = 0; j <= k; ++j) Dc(i, j) += gl.weights[mu] * psi * trial.derivative(j, gl.points[mu]);
    }
  }
  td.D = Dc.rightCols(k);
  td.W_hat = Wc.rightCols(k);
  td.d0 = Dc.col(0);
  td.w0_hat = Wc.col(0);
  td.load_nodes = gl.points;
  td.L_hat = Wc;
  return td;
}

TemporalDiscretization make_discretization(TimeScheme scheme, int k) {
  return scheme == TimeScheme::dG ? dg_discretization(k) : cg_discretization(k);
}

SpatialProblem make_spatial_problem(std::shared_ptr<const FunctionSpace> V,
                                    std::shared_ptr<const FunctionSpace> Q,
                                    const MaterialParams& params, std::optional<LoadData> data,
                                    const AssemblyOptions& options) {
  SpatialProblem sp;
  sp.V = std::move(V);
  sp.Q = std::move(Q);
  sp.params = params;
  sp.matrices = assemble_system(*sp.V, *sp.Q, params, options);
  for (const auto& [dof, value] : mark_directional_constraints(*sp.V)) {
    (void)value;
    sp.constrained.push_back(dof);
  }
  if (data) sp.loads = std::make_shared<LoadAssembler>(sp.V, sp.Q, params, *data, options);
  return sp;
}

const std::vector<Vector>& SlabSolution::coefficients(Field f) const {
  switch (f) {
  case Field::U:
    return u;
  case Field::V:
    return v;
  default:
    return p;
  }
}

Vector SlabSolution::evaluate(Field f, double t) const {
  const double tau = t_end - t_start;
  const double slack = 1e-12 * std::max(1.0, std::abs(t_end));
  if (t < t_start - slack || t > t_end + slack) {
    throw InvalidArgument("SlabSolution::evaluate: time outside the slab");
  }
  const double that = std::clamp(2.0 * (t - t_start) / tau - 1.0, -1.0, 1.0);
  const LagrangeBasis1D basis(nodes);
  const auto& c = coefficients(f);
  Vector out = Vector::Zero(c.front().size());
  for (std::size_t j = 0; j < c.size(); ++j) {
    const double w = basis.value(j, that);
    if (w != 0.0) out += w * c[j];
  }
  return out;
}

SlabState SlabSolution::end_state() const { return {u.back(), v.back(), p.back(), t_end}; }

namespace {

std::vector<char> mask_of(int n, const std::vector<int>& indices) {
  std::vector<char> mask(n, 0);
  for (int i : indices) mask.at(i) = 1;
  return mask;
}

/// Drops entries in masked rows or columns (null mask keeps everything).
SparseMatrix drop_masked(const SparseMatrix& A, const std::vector<char>* rows,
                         const std::vector<char>* cols) {
  std::vector<Triplet> triplets;
  triplets.reserve(A.nonZeros());
  for (int i = 0; i < A.outerSize(); ++i) {
    if (rows && (*rows)[i]) continue;
    for (SparseMatrix::InnerIterator it(A, i); it; ++it) {
      if (cols && (*cols)[it.col()]) continue;
      triplets.emplace_back(i, static_cast<int>(it.col()), it.value());
    }
  }
  SparseMatrix B(A.rows(), A.cols());
  B.setFromTriplets(triplets.begin(), triplets.end());
  B.makeCompressed();
  return B;
}

SparseMatrix unit_diagonal(int n, const std::vector<int>& indices) {
  std::vector<Triplet> triplets;
  for (int i : indices) triplets.emplace_back(i, i, 1.0);
  SparseMatrix I(n, n);
  I.setFromTriplets(triplets.begin(), triplets.end());
  return I;
}

struct ConstrainedMatrices {
  SparseMatrix M, Mv, Mp, A, C, Ct, B, I;
};

ConstrainedMatrices constrained_matrices(const SpatialProblem& sp) {
  const auto mask = mask_of(sp.n_u(), sp.constrained);
  const SystemMatrices& m = sp.matrices;
  ConstrainedMatrices c;
  c.M = drop_masked(m.mass_u, &mask, &mask);
  c.Mv = drop_masked(m.mass_v, &mask, &mask);
  c.A = drop_masked(m.A, &mask, &mask);
  c.C = drop_masked(m.C, &mask, nullptr);
  c.Ct = SparseMatrix(c.C.transpose());
  c.Mp = m.mass_p;
  c.B = m.B;
  c.I = unit_diagonal(sp.n_u(), sp.constrained);
  return c;
}

BlockSystem slab_matrix(const SpatialProblem& sp, const TemporalDiscretization& td, double tau,
                        const ConstrainedMatrices& c) {
  const int K = td.n_unknown();
  const int nu = sp.n_u(), np = sp.n_p();
  std::vector<int> sizes;
  for (int f = 0; f < 3; ++f) {
    for (int i = 0; i < K; ++i) sizes.push_back(f < 2 ? nu : np);
  }
  BlockSystem S(sizes, sizes);
  const double h = 0.5 * tau;
  const int U = 0, V = K, P = 2 * K;
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) {
      const double d = td.D(i, j);
      const double w = h * td.W_hat(i, j);
      if (d != 0.0) {
        S.add(U + i, U + j, c.M, d);
        S.add(V + i, V + j, c.Mv, d);
        S.add(P + i, P + j, c.Mp, d);
      }
      if (w != 0.0) {
        S.add(U + i, V + j, c.M, -w);
        S.add(V + i, U + j, c.A, w);
        S.add(V + i, P + j, c.C, w);
        S.add(P + i, V + j, c.Ct, -w);
        S.add(P + i, P + j, c.B, w);
      }
    }
    if (!sp.constrained.empty()) {
      S.add(U + i, U + i, c.I);
      S.add(V + i, V + i, c.I);
    }
  }
  return S;
}

Vector slab_rhs(const SpatialProblem& sp, const TemporalDiscretization& td, const SlabState& s,
                double t_start, double t_end) {
  const int K = td.n_unknown();
  const int nu = sp.n_u(), np = sp.n_p();
  if (s.u.size() != nu || s.v.size() != nu || s.p.size() != np) {
    throw DimensionMismatch("slab state does not match the spaces");
  }
  const double h = 0.5 * (t_end - t_start);
  const double mid = 0.5 * (t_start + t_end);
  const SystemMatrices& m = sp.matrices;
  const Vector Mu = m.mass_u * s.u;
  const Vector Mv = m.mass_u * s.v;
  const Vector rMv = m.mass_v * s.v;
  const Vector Op_v = m.A * s.u + m.C * s.p;
  const Vector Mpp = m.mass_p * s.p;
  const Vector Op_p = -(m.C.transpose() * s.v) + m.B * s.p;

  Vector rhs = Vector::Zero(K * (2 * nu + np));
  auto u_block = [&](int i) { return rhs.segment(i * nu, nu); };
  auto v_block = [&](int i) { return rhs.segment((K + i) * nu, nu); };
  auto p_block = [&](int i) { return rhs.segment(2 * K * nu + i * np, np); };

  for (int i = 0; i < K; ++i) {
    const double d0 = td.d0[i], w0 = h * td.w0_hat[i];
    u_block(i) = -d0 * Mu + w0 * Mv;
    v_block(i) = -d0 * rMv - w0 * Op_v;
    p_block(i) = -d0 * Mpp - w0 * Op_p;
  }
  if (sp.loads) {
    for (std::size_t l = 0; l < td.load_nodes.size(); ++l) {
      const auto [F, G] = (*sp.loads)(mid + h * td.load_nodes[l]);
      for (int i = 0; i < K; ++i) {
        const double w = h * td.L_hat(i, static_cast<int>(l));
        if (w == 0.0) continue;
        v_block(i) += w * F;
        p_block(i) += w * G;
      }
    }
  }
  for (int i = 0; i < K; ++i) {
    for (int c : sp.constrained) {
      u_block(i)[c] = 0.0;
      v_block(i)[c] = 0.0;
    }
  }
  return rhs;
}

void check_slab(double t_start, double t_end) {
  if (!(t_end > t_start)) throw InvalidArgument("slab interval must have positive length");
}

} // namespace

SlabSystem build_slab(const SpatialProblem& problem, const TemporalDiscretization& td,
                      const SlabState& state, double t_start, double t_end) {
  check_slab(t_start, t_end);
  const ConstrainedMatrices c = constrained_matrices(problem);
  return {slab_matrix(problem, td, t_end - t_start, c),
          slab_rhs(problem, td, state, t_start, t_end)};
}

SlabSystem build_dg_slab(const SpatialProblem& problem, const SlabState& state, int k,
                         double t_start, double t_end) {
  return build_slab(problem, dg_discretization(k), state, t_start, t_end);
}

SlabSystem build_cg_slab(const SpatialProblem& problem, const SlabState& state, int k,
                         double t_start, double t_end) {
  return build_slab(problem, cg_discretization(k), state, t_start, t_end);
}

SlabSolution unpack_slab(const SpatialProblem& problem, const TemporalDiscretization& td,
                         const SlabState& state, double t_start, double t_end, const Vector& x) {
  const int K = td.n_unknown();
  const int nu = problem.n_u(), np = problem.n_p();
  if (x.size() != K * (2 * nu + np)) throw DimensionMismatch("unpack_slab: solution length");
  SlabSolution s;
  s.scheme = td.scheme;
  s.k = td.k;
  s.t_start = t_start;
  s.t_end = t_end;
  s.nodes = td.trial_nodes;
  if (td.first_unknown == 1) {
    s.u.push_back(state.u);
    s.v.push_back(state.v);
    s.p.push_back(state.p);
  }
  for (int i = 0; i < K; ++i) {
    s.u.push_back(x.segment(i * nu, nu));
    s.v.push_back(x.segment((K + i) * nu, nu));
    s.p.push_back(x.segment(2 * K * nu + i * np, np));
  }
  return s;
}

std::string to_string(SolverKind kind) {
  switch (kind) {
  case SolverKind::Gmres:
    return "gmres";
  case SolverKind::Direct:
    return "direct";
  default:
    return "diagonalized";
  }
}

SolverKind solver_kind_from_string(const std::string& name) {
  if (name == "gmres") return SolverKind::Gmres;
  if (name == "direct") return SolverKind::Direct;
  if (name == "diagonalized") return SolverKind::Diagonalized;
  throw InvalidArgument("unknown solver '" + name + "' (gmres, direct, diagonalized)");
}

struct SlabSolver::Cache {
  double tau = -1.0;
  ConstrainedMatrices c;
  bool have_c = false;
  // monolithic
  SparseMatrix matrix;
  std::unique_ptr<Ilu0> ilu;
  std::unique_ptr<DirectSolver> direct;
  // diagonalized
  Eigen::MatrixXcd S, S_inv;
  Eigen::MatrixXd W_inv;
  std::vector<ComplexDirectSolver> modes;
};

SlabSolver::SlabSolver(std::shared_ptr<const SpatialProblem> problem, TemporalDiscretization td,
                       SolverOptions options)
    : problem_(std::move(problem)), td_(std::move(td)), options_(options),
      cache_(std::make_unique<Cache>()) {}

SlabSolver::~SlabSolver() = default;
SlabSolver::SlabSolver(SlabSolver&&) noexcept = default;
SlabSolver& SlabSolver::operator=(SlabSolver&&) noexcept = default;

namespace {

/// [lambda M, -M, 0; A, rho lambda M, C; 0, -C^T, lambda Mp + B] with unit rows on constrained dofs.
ComplexSparseMatrix mode_matrix(const ConstrainedMatrices& c, std::complex<double> lambda,
                                int nu, int np) {
  using Z = std::complex<double>;
  std::vector<Eigen::Triplet<Z, int>> t;
  t.reserve(3 * c.M.nonZeros() + c.A.nonZeros() + 2 * c.C.nonZeros() + c.B.nonZeros() +
            c.Mp.nonZeros() + 2 * c.I.nonZeros());
  auto put = [&t](const SparseMatrix& A, int r0, int c0, Z scale) {
    for (int i = 0; i < A.outerSize(); ++i) {
      for (SparseMatrix::InnerIterator it(A, i); it; ++it) {
        t.emplace_back(r0 + i, c0 + static_cast<int>(it.col()), scale * it.value());
      }
    }
  };
  put(c.M, 0, 0, lambda);
  put(c.M, 0, nu, -1.0);
  put(c.I, 0, 0, 1.0);
  put(c.A, nu, 0, 1.0);
  put(c.Mv, nu, nu, lambda);
  put(c.C, nu, 2 * nu, 1.0);
  put(c.I, nu, nu, 1.0);
  put(c.Ct, 2 * nu, nu, -1.0);
  put(c.Mp, 2 * nu, 2 * nu, lambda);
  put(c.B, 2 * nu, 2 * nu, 1.0);
  ComplexSparseMatrix Z_(2 * nu + np, 2 * nu + np);
  Z_.setFromTriplets(t.begin(), t.end());
  Z_.makeCompressed();
  return Z_;
}

} // namespace

SlabSolution SlabSolver::solve(const SlabState& state, double t_start, double t_end,
                               SlabStats* stats) {
  check_slab(t_start, t_end);
  const auto clock_start = std::chrono::steady_clock::now();
  const SpatialProblem& sp = *problem_;
  const double tau = t_end - t_start;
  const int K = td_.n_unknown();
  const int nu = sp.n_u(), np = sp.n_p();
  Cache& cache = *cache_;
  if (std::abs(tau - cache.tau) > 1e-13 * tau) {
    cache.matrix = SparseMatrix();
    cache.ilu.reset();
    cache.direct.reset();
    cache.modes.clear();
    cache.tau = tau;
  }
  if (!cache.have_c) {
    cache.c = constrained_matrices(sp);
    cache.have_c = true;
  }
  const Vector rhs = slab_rhs(sp, td_, state, t_start, t_end);
  SlabStats local;
  Vector x;

  auto ensure_matrix = [&] {
    if (cache.matrix.rows() == 0) cache.matrix = slab_matrix(sp, td_, tau, cache.c).assemble();
  };
  auto direct_solve = [&] {
    ensure_matrix();
    if (!cache.direct) cache.direct = std::make_unique<DirectSolver>(cache.matrix);
    x = cache.direct->solve(rhs);
    local.residual = rhs.norm() > 0 ? (rhs - cache.matrix * x).norm() / rhs.norm() : 0.0;
  };

  switch (options_.kind) {
  case SolverKind::Gmres: {
    ensure_matrix();
    try {
      if (!cache.ilu) cache.ilu = std::make_unique<Ilu0>(cache.matrix);
      SolverStats st;
      x = solve_gmres(cache.matrix, rhs, *cache.ilu, options_.gmres, &st);
      local.iterations = st.iterations;
      local.residual = st.residual;
    } catch (const Error&) {
      if (!options_.direct_fallback) throw;
      local.used_fallback = true;
      direct_solve();
    }
    break;
  }
  case SolverKind::Direct:
    direct_solve();
    break;
  case SolverKind::Diagonalized: {
    if (cache.modes.empty()) {
      cache.W_inv = td_.W_hat.inverse();
      const Eigen::MatrixXd G = (2.0 / tau) * cache.W_inv * td_.D;
      Eigen::EigenSolver<Eigen::MatrixXd> eig(G);
      if (eig.info() != Eigen::Success) throw SingularMatrix("temporal eigen-decomposition failed");
      cache.S = eig.eigenvectors();
      cache.S_inv = cache.S.inverse();
      for (int m = 0; m < K; ++m) {
        cache.modes.emplace_back(mode_matrix(cache.c, eig.eigenvalues()[m], nu, np));
      }
    }
    // scale rows by ((tau/2) W_hat)^{-1}, then rotate into eigen-coordinates
    const int n = 2 * nu + np;
    const Eigen::MatrixXd Wi = (2.0 / tau) * cache.W_inv;
    auto field_rows = [&](const Vector& r, int i) {
      Vector out(n);
      out.segment(0, nu) = r.segment(i * nu, nu);
      out.segment(nu, nu) = r.segment((K + i) * nu, nu);
      out.segment(2 * nu, np) = r.segment(2 * K * nu + i * np, np);
      return out;
    };
    std::vector<Vector> scaled(K, Vector::Zero(n));
    for (int i = 0; i < K; ++i) {
      const Vector ri = field_rows(rhs, i);
      for (int j = 0; j < K; ++j) {
        if (Wi(j, i) != 0.0) scaled[j] += Wi(j, i) * ri;
      }
    }
    std::vector<ComplexVector> hat(K);
    for (int m = 0; m < K; ++m) {
      ComplexVector b = ComplexVector::Zero(n);
      for (int i = 0; i < K; ++i) b += cache.S_inv(m, i) * scaled[i].cast<std::complex<double>>();
      hat[m] = cache.modes[m].solve(b);
    }
    x = Vector::Zero(rhs.size());
    for (int i = 0; i < K; ++i) {
      ComplexVector xi = ComplexVector::Zero(n);
      for (int m = 0; m < K; ++m) xi += cache.S(i, m) * hat[m];
      const Vector re = xi.real();
      x.segment(i * nu, nu) = re.segment(0, nu);
      x.segment((K + i) * nu, nu) = re.segment(nu, nu);
      x.segment(2 * K * nu + i * np, np) = re.segment(2 * nu, np);
    }
    break;
  }
  }
  if (!x.allFinite()) throw SingularMatrix("slab solution is not finite");
  local.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
  if (stats) *stats = local;
  return unpack_slab(sp, td_, state, t_start, t_end, x);
}

Trajectory advance(const SchemeConfig& config, std::shared_ptr<const SpatialProblem> problem,
                   const SlabState& initial, const SolverOptions& options,
                   const SlabObserver& observer, bool keep_slabs) {
  config.validate();
  SlabSolver solver(problem, make_discretization(config.scheme, config.k), options);
  Trajectory traj;
  traj.config = config;
  traj.initial = initial;
  traj.initial.t = 0.0;
  SlabState state = traj.initial;
  for (int n = 1; n <= config.n_slabs; ++n) {
    const double t0 = config.T * (n - 1) / config.n_slabs;
    const double t1 = config.T * n / config.n_slabs;
    SlabStats stats;
    SlabSolution sol;
    try {
      sol = solver.solve(state, t0, t1, &stats);
    } catch (const SlabFailure&) {
      throw;
    } catch (const Error& e) {
      throw SlabFailure(n, e.what());
    }
    state = sol.end_state();
    traj.end_states.push_back(state);
    if (observer) observer(n, sol, stats);
    if (keep_slabs) traj.slabs.push_back(std::move(sol));
  }
  return traj;
}

FEFunction evaluate_at_time(const Trajectory& trajectory, const SpatialProblem& problem, double t,
                            Field field) {
  const SchemeConfig& cfg = trajectory.config;
  if (t < 0.0 || t > cfg.T * (1.0 + 1e-12)) throw InvalidArgument("evaluate_at_time: t outside [0, T]");
  const auto space = field == Field::P ? problem.Q : problem.V;
  if (t == 0.0) {
    const SlabState& s = trajectory.initial;
    return FEFunction(space, field == Field::U ? s.u : field == Field::V ? s.v : s.p);
  }
  if (trajectory.slabs.size() != static_cast<std::size_t>(cfg.n_slabs)) {
    throw InvalidArgument("evaluate_at_time: trajectory does not keep its slabs");
  }
  int n = static_cast<int>(std::ceil(t / cfg.tau() - 1e-9));
  n = std::clamp(n, 1, cfg.n_slabs);
  return FEFunction(space, trajectory.slabs[n - 1].evaluate(field, t));
}

double discrete_energy(const SpatialProblem& problem, const Vector& u, const Vector& v,
                       const Vector& p) {
  const SystemMatrices& m = problem.matrices;
  return 0.5 * (v.dot(m.mass_v * v) + u.dot(m.A * u) + p.dot(m.mass_p * p));
}

void write_checkpoint(std::ostream& out, const SlabSolution& s, int slab, int r) {
  out << "# scheme=" << to_string(s.scheme) << " k=" << s.k << " r=" << r << " slab=" << slab
      << std::setprecision(17) << " t_start=" << s.t_start << " t_n=" << s.t_end
      << " nodes=" << s.nodes.size() << " n_u=" << s.u.front().size()
      << " n_p=" << s.p.front().size() << "\n";
  auto dump = [&out](const char* name, const std::vector<Vector>& c) {
    for (std::size_t j = 0; j < c.size(); ++j) {
      out << name << ' ' << j;
      for (Eigen::Index i = 0; i < c[j].size(); ++i) out << ' ' << c[j][i];
      out << '\n';
    }
  };
  dump("u", s.u);
  dump("v", s.v);
  dump("p", s.p);
}

} // namespace biot
