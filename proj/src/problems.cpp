#include "biot/problems.hpp"

#include "biot/errors.hpp"
#include "biot/quadrature.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <sstream>

namespace biot {

namespace {

constexpr double kPi = 3.14159265358979323846;

MaterialParams material(double E, double nu, int r) {
  MaterialParams prm;
  const Lame lame = lame_from_E_nu(E, nu);
  prm.lambda = lame.lambda;
  prm.mu = lame.mu;
  prm.with_default_penalties(r);
  return prm;
}

int slabs_for(double T, double tau) {
  const double n = T / tau;
  const long rounded = std::lround(n);
  if (rounded < 1 || std::abs(n - rounded) > 1e-9 * n) {
    throw InvalidArgument("final time is not an integer multiple of the slab length");
  }
  return static_cast<int>(rounded);
}

} // namespace

ManufacturedCase ManufacturedCase::defaults(int r) {
  ManufacturedCase c;
  c.params = material(c.E, c.nu, r);
  return c;
}

double ManufacturedCase::phi(Point x, double t) const {
  return std::sin(omega1 * t * t) * std::sin(omega2 * x.x) * std::sin(omega2 * x.y);
}

std::array<double, 2> ManufacturedCase::u(Point x, double t) const {
  const double f = phi(x, t);
  return {f, f};
}

std::array<double, 2> ManufacturedCase::v(Point x, double t) const {
  const double f = 2.0 * omega1 * t * std::cos(omega1 * t * t) * std::sin(omega2 * x.x) *
                   std::sin(omega2 * x.y);
  return {f, f};
}

double ManufacturedCase::p(Point x, double t) const { return phi(x, t); }

std::array<double, 4> ManufacturedCase::grad_u(Point x, double t) const {
  const double s = std::sin(omega1 * t * t);
  const double dx = s * omega2 * std::cos(omega2 * x.x) * std::sin(omega2 * x.y);
  const double dy = s * omega2 * std::sin(omega2 * x.x) * std::cos(omega2 * x.y);
  return {dx, dy, dx, dy};
}

std::array<double, 2> ManufacturedCase::body_force(Point x, double t) const {
  const double w1 = omega1, w2 = omega2;
  const double sx = std::sin(w2 * x.x), sy = std::sin(w2 * x.y);
  const double cx = std::cos(w2 * x.x), cy = std::cos(w2 * x.y);
  const double s = std::sin(w1 * t * t), c = std::cos(w1 * t * t);
  const double ph = s * sx * sy;
  const double ph_tt = (2.0 * w1 * c - 4.0 * w1 * w1 * t * t * s) * sx * sy;
  const double ph_xy = s * w2 * w2 * cx * cy;
  const double ph_x = s * w2 * cx * sy;
  const double ph_y = s * w2 * sx * cy;
  const double lam = params.lambda, mu = params.mu;
  // div(C eps(u)) = mu lap u + (lambda + mu) grad div u for u = (phi, phi)
  const double div_sigma_x = mu * (-2.0 * w2 * w2 * ph) + (lam + mu) * (-w2 * w2 * ph + ph_xy);
  const double div_sigma_y = mu * (-2.0 * w2 * w2 * ph) + (lam + mu) * (ph_xy - w2 * w2 * ph);
  const double rho = params.rho;
  return {ph_tt - (div_sigma_x - params.alpha * ph_x) / rho,
          ph_tt - (div_sigma_y - params.alpha * ph_y) / rho};
}

double ManufacturedCase::pressure_source(Point x, double t) const {
  const double w1 = omega1, w2 = omega2;
  const double sx = std::sin(w2 * x.x), sy = std::sin(w2 * x.y);
  const double cx = std::cos(w2 * x.x), cy = std::cos(w2 * x.y);
  const double s = std::sin(w1 * t * t);
  const double st = 2.0 * w1 * t * std::cos(w1 * t * t);
  const double ph_t = st * sx * sy;
  const double ph_tx = st * w2 * cx * sy;
  const double ph_ty = st * w2 * sx * cy;
  const double ph_xx = -w2 * w2 * s * sx * sy;
  const double ph_yy = ph_xx;
  const double ph_xy = s * w2 * w2 * cx * cy;
  const Eigen::Matrix2d& K = params.K;
  const double div_K_grad =
      K(0, 0) * ph_xx + (K(0, 1) + K(1, 0)) * ph_xy + K(1, 1) * ph_yy;
  return params.c0 * ph_t + params.alpha * (ph_tx + ph_ty) - div_K_grad;
}

ExactSolution ManufacturedCase::exact() const {
  const ManufacturedCase self = *this;
  ExactSolution e;
  e.u = [self](Point x, double t) { return self.u(x, t); };
  e.v = [self](Point x, double t) { return self.v(x, t); };
  e.grad_u = [self](Point x, double t) { return self.grad_u(x, t); };
  e.p = [self](Point x, double t) { return self.p(x, t); };
  return e;
}

LoadData ManufacturedCase::load_data() const {
  const ManufacturedCase self = *this;
  LoadData d = LoadData::zero();
  d.body_force = [self](Point x, double t) {
    const auto f = self.body_force(x, t);
    return std::array<double, 2>{self.params.rho * f[0], self.params.rho * f[1]};
  };
  d.pressure_source = [self](Point x, double t) { return self.pressure_source(x, t); };
  d.displacement_bc = [self](Point x, double t) { return self.u(x, t); };
  d.velocity_bc = [self](Point x, double t) { return self.v(x, t); };
  d.pressure_bc = [self](Point x, double t) { return self.p(x, t); };
  return d;
}

Mesh ManufacturedCase::mesh(int level) const {
  if (level < 0) throw InvalidArgument("negative refinement level");
  return unit_square_mesh(base_cells << level);
}

double ManufacturedCase::tau(int level) const { return tau0 / std::ldexp(1.0, level); }

int ManufacturedCase::n_slabs(int level) const { return slabs_for(T, tau(level)); }

double traction_profile(double x) {
  if (x < -1e-12 || x > 0.5 + 1e-12) throw InvalidArgument("traction profile defined on [0, 0.5]");
  if (x <= 0.125) return -64.0 * x * x * (16.0 * x - 3.0);
  const double a = 2.0 * x - 1.0;
  return 16.0 / 27.0 * a * a * (16.0 * x + 1.0);
}

BenchmarkCase BenchmarkCase::defaults(int r) {
  BenchmarkCase c;
  c.params = material(c.E, c.nu, r);
  return c;
}

std::array<double, 2> BenchmarkCase::traction(Point x, double t) const {
  const bool loaded = std::abs(x.y - 1.0) < 1e-12 && x.x <= std::min(0.5, geometry.load_end) + 1e-12;
  if (!loaded) return {0.0, 0.0};
  const double q = traction_profile(std::clamp(x.x, 0.0, 0.5)) * std::sin(8.0 * kPi * t);
  // the loaded segment has outward normal e2, so both directions give (0, q)
  return {0.0, q};
}

LoadData BenchmarkCase::load_data() const {
  const BenchmarkCase self = *this;
  LoadData d = LoadData::zero();
  d.traction = [self](Point x, double t) { return self.traction(x, t); };
  return d;
}

Mesh BenchmarkCase::mesh(int level) const { return l_shaped_mesh(level, geometry); }

double BenchmarkCase::tau(int level) const { return tau0 / std::ldexp(1.0, level); }

int BenchmarkCase::n_slabs(int level) const { return slabs_for(T, tau(level)); }

ErrorAccumulator::ErrorAccumulator(const SpatialProblem& problem, ExactSolution exact,
                                   int temporal_points, int spatial_points)
    : problem_(&problem), exact_(std::move(exact)), temporal_points_(temporal_points),
      spatial_points_(spatial_points) {
  if (spatial_points_ <= 0) spatial_points_ = problem.V->element().degree() + 3;
  const QuadRule g = gauss_legendre(spatial_points_);
  for (std::size_t j = 0; j < g.size(); ++j) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      points_.push_back({g.points[i], g.points[j]});
      weights_.push_back(g.weights[i] * g.weights[j]);
    }
  }
  table_v_ = tabulate(problem.V->element(), points_);
  table_p_ = tabulate(problem.Q->element(), points_);
}

void ErrorAccumulator::add(const SlabSolution& slab) {
  const int nt = temporal_points_ > 0 ? temporal_points_ : slab.k + 3;
  const QuadRule gt = gauss_legendre(nt);
  const double h = 0.5 * (slab.t_end - slab.t_start);
  const double mid = 0.5 * (slab.t_start + slab.t_end);
  const FunctionSpace& V = *problem_->V;
  const FunctionSpace& Q = *problem_->Q;
  const Mesh& mesh = V.mesh();
  const int nv = V.n_local(), np = Q.n_local();
  Eigen::VectorXd cu1(nv), cu2(nv), cv1(nv), cv2(nv), cp(np);

  for (std::size_t l = 0; l < gt.size(); ++l) {
    const double t = mid + h * gt.points[l];
    const Vector u = slab.evaluate(Field::U, t);
    const Vector v = slab.evaluate(Field::V, t);
    const Vector p = slab.evaluate(Field::P, t);
    double eu = 0.0, ev = 0.0, ep = 0.0;
    for (int c = 0; c < static_cast<int>(mesh.n_cells()); ++c) {
      const Cell& cell = mesh.cells()[c];
      for (int i = 0; i < nv; ++i) {
        cu1[i] = u[V.dof(c, i, 0)];
        cu2[i] = u[V.dof(c, i, 1)];
        cv1[i] = v[V.dof(c, i, 0)];
        cv2[i] = v[V.dof(c, i, 1)];
      }
      for (int i = 0; i < np; ++i) cp[i] = p[Q.dof(c, i, 0)];
      const double sx = 2.0 / cell.width(), sy = 2.0 / cell.height();
      const Eigen::VectorXd u1x = table_v_.dxi * cu1 * sx, u1y = table_v_.deta * cu1 * sy;
      const Eigen::VectorXd u2x = table_v_.dxi * cu2 * sx, u2y = table_v_.deta * cu2 * sy;
      const Eigen::VectorXd v1 = table_v_.values * cv1, v2 = table_v_.values * cv2;
      const Eigen::VectorXd ph = table_p_.values * cp;
      const double jac = 0.25 * cell.area();
      for (std::size_t q = 0; q < points_.size(); ++q) {
        const Point x = FunctionSpace::to_physical(cell, points_[q]);
        const auto gu = exact_.grad_u(x, t);
        const auto ve = exact_.v(x, t);
        const double pe = exact_.p(x, t);
        const double w = weights_[q] * jac;
        eu += w * (std::pow(gu[0] - u1x[q], 2) + std::pow(gu[1] - u1y[q], 2) +
                   std::pow(gu[2] - u2x[q], 2) + std::pow(gu[3] - u2y[q], 2));
        ev += w * (std::pow(ve[0] - v1[q], 2) + std::pow(ve[1] - v2[q], 2));
        ep += w * std::pow(pe - ph[q], 2);
      }
    }
    const double wt = h * gt.weights[l];
    sum_grad_u_ += wt * eu;
    sum_v_ += wt * ev;
    sum_p_ += wt * ep;
  }
}

ErrorNorms ErrorAccumulator::result() const {
  return {std::sqrt(sum_grad_u_), std::sqrt(sum_v_), std::sqrt(sum_p_)};
}

double l2l2_error(const Trajectory& trajectory, const SpatialProblem& problem,
                  const ExactSolution& exact, NormKind kind) {
  if (trajectory.slabs.size() != static_cast<std::size_t>(trajectory.config.n_slabs)) {
    throw InvalidArgument("l2l2_error: trajectory does not keep its slabs");
  }
  ErrorAccumulator acc(problem, exact);
  for (const SlabSolution& s : trajectory.slabs) acc.add(s);
  const ErrorNorms e = acc.result();
  switch (kind) {
  case NormKind::GradU:
    return e.grad_u;
  case NormKind::V:
    return e.v;
  default:
    return e.p;
  }
}

std::vector<double> eoc(const std::vector<double>& errors) {
  if (errors.size() < 2) throw InvalidArgument("eoc: need at least two errors");
  for (double e : errors) {
    if (!(e > 0.0)) throw InvalidArgument("eoc: errors must be positive");
  }
  std::vector<double> rates;
  for (std::size_t j = 1; j < errors.size(); ++j) rates.push_back(std::log2(errors[j - 1] / errors[j]));
  return rates;
}

GoalEvaluator::GoalEvaluator(const FunctionSpace& V, const FunctionSpace& Q) {
  if (V.components() != 2 || Q.components() != 1 || V.mesh_ptr() != Q.mesh_ptr()) {
    throw InvalidArgument("GoalEvaluator: expects vector and scalar spaces on one mesh");
  }
  const Mesh& mesh = V.mesh();
  const QuadRule g = gauss_legendre(V.element().degree() + 1);
  for (const Face& face : mesh.faces()) {
    if (!face.is_goal_segment) continue;
    const int c = face.cells[0];
    std::vector<Point> pts;
    for (double s : g.points) {
      switch (face.local_index[0]) {
      case 0:
        pts.push_back({s, -1.0});
        break;
      case 1:
        pts.push_back({1.0, s});
        break;
      case 2:
        pts.push_back({s, 1.0});
        break;
      default:
        pts.push_back({-1.0, s});
        break;
      }
    }
    const ReferenceTable tv = tabulate(V.element(), pts);
    const ReferenceTable tq = tabulate(Q.element(), pts);
    FaceData fd;
    fd.u_weights = Eigen::MatrixXd::Zero(2, V.n_local());
    fd.p_weights = Eigen::VectorXd::Zero(Q.n_local());
    for (std::size_t q = 0; q < pts.size(); ++q) {
      const double w = g.weights[q] * 0.5 * face.measure;
      for (int i = 0; i < V.n_local(); ++i) {
        fd.u_weights(0, i) += w * tv.values(q, i) * face.normal.x;
        fd.u_weights(1, i) += w * tv.values(q, i) * face.normal.y;
      }
      for (int i = 0; i < Q.n_local(); ++i) fd.p_weights[i] += w * tq.values(q, i);
    }
    for (int comp = 0; comp < 2; ++comp) {
      for (int i = 0; i < V.n_local(); ++i) fd.u_dofs.push_back(V.dof(c, i, comp));
    }
    for (int i = 0; i < Q.n_local(); ++i) fd.p_dofs.push_back(Q.dof(c, i, 0));
    length_ += face.measure;
    faces_.push_back(std::move(fd));
  }
  if (faces_.empty()) throw InvalidArgument("goal segment has no faces");
}

GoalValues GoalEvaluator::operator()(const Vector& u, const Vector& p) const {
  GoalValues g;
  for (const FaceData& fd : faces_) {
    const int nl = static_cast<int>(fd.u_weights.cols());
    for (int comp = 0; comp < 2; ++comp) {
      for (int i = 0; i < nl; ++i) g.G_u += fd.u_weights(comp, i) * u[fd.u_dofs[comp * nl + i]];
    }
    for (std::size_t i = 0; i < fd.p_dofs.size(); ++i) g.G_p += fd.p_weights[i] * p[fd.p_dofs[i]];
  }
  return g;
}

GoalValues goal_quantities(const FEFunction& u, const FEFunction& p) {
  return GoalEvaluator(*u.space, *p.space)(u.coefficients, p.coefficients);
}

GoalCharacteristics goal_characteristics(const GoalSeries& s, double t_from, double t_to,
                                         double max_spacing) {
  if (s.t.size() != s.G_u.size() || s.t.size() != s.G_p.size()) {
    throw DimensionMismatch("goal series columns differ in length");
  }
  if (!(t_to > t_from)) throw InvalidArgument("empty characteristics window");
  const double tol = 1e-9 * std::max(1.0, std::abs(t_to));
  if (s.t.empty() || s.t.front() > t_from + tol || s.t.back() < t_to - tol) {
    throw InvalidArgument("goal series does not cover the window");
  }
  GoalCharacteristics c{INFINITY, -INFINITY, INFINITY, -INFINITY};
  double previous = -INFINITY;
  for (std::size_t i = 0; i < s.t.size(); ++i) {
    if (s.t[i] < t_from - tol || s.t[i] > t_to + tol) {
      if (s.t[i] < t_from - tol) previous = s.t[i];
      continue;
    }
    if (max_spacing > 0.0 && std::isfinite(previous) && s.t[i] - previous > max_spacing + tol) {
      throw InvalidArgument("goal series sampling too coarse in the window");
    }
    previous = s.t[i];
    c.min_p = std::min(c.min_p, s.G_p[i]);
    c.max_p = std::max(c.max_p, s.G_p[i]);
    c.min_u = std::min(c.min_u, s.G_u[i]);
    c.max_u = std::max(c.max_u, s.G_u[i]);
  }
  return c;
}

double dominant_period(const std::vector<double>& t, const std::vector<double>& values,
                       double t_from) {
  if (t.size() != values.size()) throw DimensionMismatch("dominant_period: length mismatch");
  std::size_t first = 0;
  while (first < t.size() && t[first] < t_from) ++first;
  const std::size_t n = t.size() - first;
  if (n < 8) throw InvalidArgument("dominant_period: too few samples");
  const double dt = (t.back() - t[first]) / static_cast<double>(n - 1);
  double mean = 0.0;
  for (std::size_t i = first; i < t.size(); ++i) mean += values[i];
  mean /= static_cast<double>(n);

  std::size_t m = 1;
  while (m < 8 * n) m <<= 1;
  std::vector<double> x(m, 0.0);
  bool constant = true;
  for (std::size_t i = 0; i < n; ++i) {
    const double hann = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n - 1));
    x[i] = hann * (values[first + i] - mean);
    if (x[i] != 0.0) constant = false;
  }
  if (constant) throw InvalidArgument("dominant_period: constant signal");
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> X;
  fft.fwd(X, x);

  // skip bins below two cycles per window, where the Hann main lobe of the mean sits
  const std::size_t lo = std::max<std::size_t>(2, (2 * m) / n);
  const std::size_t hi = m / 2 - 1;
  if (lo >= hi) throw InvalidArgument("dominant_period: window too short");
  std::size_t best = lo;
  for (std::size_t j = lo; j <= hi; ++j) {
    if (std::abs(X[j]) > std::abs(X[best])) best = j;
  }
  const double a = std::abs(X[best - 1]), b = std::abs(X[best]), c = std::abs(X[best + 1]);
  const double denom = a - 2.0 * b + c;
  const double shift = denom != 0.0 ? 0.5 * (a - c) / denom : 0.0;
  const double frequency = (static_cast<double>(best) + shift) / (static_cast<double>(m) * dt);
  return 1.0 / frequency;
}

std::vector<ConvergenceRow> run_convergence(const ManufacturedCase& mcase, TimeScheme scheme,
                                            int k, int r, const std::vector<int>& levels,
                                            const SolverOptions& solver, const StudyHooks& hooks) {
  if (levels.empty()) throw InvalidArgument("run_convergence: no levels");
  std::vector<ConvergenceRow> rows;
  for (int level : levels) {
    auto mesh = std::make_shared<const Mesh>(mcase.mesh(level));
    auto V = std::make_shared<const FunctionSpace>(build_q_space(mesh, r, 2));
    auto Q = std::make_shared<const FunctionSpace>(build_p_disc_space(mesh, r - 1));
    auto problem = std::make_shared<const SpatialProblem>(
        make_spatial_problem(V, Q, mcase.params, mcase.load_data(), mcase.assembly));
    if (hooks.on_setup) hooks.on_setup(level, *mesh, *problem);
    const ExactSolution ex = mcase.exact();
    SlabState init;
    init.u = interpolate(*V, [&](Point x, int c) { return ex.u(x, 0.0)[c]; });
    init.v = interpolate(*V, [&](Point x, int c) { return ex.v(x, 0.0)[c]; });
    init.p = interpolate(*Q, [&](Point x, int) { return ex.p(x, 0.0); });
    SchemeConfig cfg{scheme, k, mcase.n_slabs(level), mcase.T};
    ErrorAccumulator acc(*problem, ex);
    if (hooks.log) {
      std::ostringstream os;
      os << "level " << level << ": cells " << mesh->n_cells() << ", dofs u " << V->n_dofs()
         << ", p " << Q->n_dofs() << ", slabs " << cfg.n_slabs;
      hooks.log(os.str());
    }
    advance(
        cfg, problem, init, solver,
        [&](int n, const SlabSolution& s, const SlabStats& st) {
          acc.add(s);
          if (hooks.on_slab) hooks.on_slab(level, n, s);
          if (hooks.log) {
            std::ostringstream os;
            os << "level " << level << " slab " << n << " t=" << s.t_end << " iterations "
               << st.iterations << " residual " << st.residual << " fallback "
               << st.used_fallback << " seconds " << st.seconds;
            hooks.log(os.str());
          }
        },
        false);
    rows.push_back({level, mesh->mesh_size(), cfg.tau(), acc.result()});
  }
  return rows;
}

BenchmarkRun run_benchmark(const BenchmarkCase& bcase, TimeScheme scheme, int k, int r, int level,
                           const SolverOptions& solver, const StudyHooks& hooks) {
  return run_benchmark(bcase, scheme, k, r, level, bcase.tau(level), bcase.T, solver, hooks);
}

BenchmarkRun run_benchmark(const BenchmarkCase& bcase, TimeScheme scheme, int k, int r, int level,
                           double tau, double T, const SolverOptions& solver,
                           const StudyHooks& hooks) {
  auto mesh = std::make_shared<const Mesh>(bcase.mesh(level));
  auto V = std::make_shared<const FunctionSpace>(build_q_space(mesh, r, 2));
  auto Q = std::make_shared<const FunctionSpace>(build_p_disc_space(mesh, r - 1));
  auto problem = std::make_shared<const SpatialProblem>(
      make_spatial_problem(V, Q, bcase.params, bcase.load_data(), bcase.assembly));
  if (hooks.on_setup) hooks.on_setup(level, *mesh, *problem);
  const GoalEvaluator goal(*V, *Q);
  SlabState init{Vector::Zero(V->n_dofs()), Vector::Zero(V->n_dofs()), Vector::Zero(Q->n_dofs()),
                 0.0};
  SchemeConfig cfg{scheme, k, slabs_for(T, tau), T};
  BenchmarkRun run;
  run.level = level;
  run.h = mesh->mesh_size();
  run.tau = cfg.tau();
  const GoalValues g0 = goal(init.u, init.p);
  run.series.t.push_back(0.0);
  run.series.G_u.push_back(g0.G_u);
  run.series.G_p.push_back(g0.G_p);
  if (hooks.log) {
    std::ostringstream os;
    os << "level " << level << ": cells " << mesh->n_cells() << ", dofs u " << V->n_dofs()
       << ", p " << Q->n_dofs() << ", slabs " << cfg.n_slabs;
    hooks.log(os.str());
  }
  advance(
      cfg, problem, init, solver,
      [&](int n, const SlabSolution& s, const SlabStats& st) {
        for (int j = 1; j <= kGoalSamplesPerSlab; ++j) {
          const double t =
              j == kGoalSamplesPerSlab
                  ? s.t_end
                  : s.t_start + (s.t_end - s.t_start) * j / kGoalSamplesPerSlab;
          const GoalValues g = goal(s.evaluate(Field::U, t), s.evaluate(Field::P, t));
          run.series.t.push_back(t);
          run.series.G_u.push_back(g.G_u);
          run.series.G_p.push_back(g.G_p);
        }
        if (hooks.on_slab) hooks.on_slab(level, n, s);
        if (hooks.log) {
          std::ostringstream os;
          os << "level " << level << " slab " << n << " t=" << s.t_end << " iterations "
             << st.iterations << " residual " << st.residual << " fallback " << st.used_fallback
             << " seconds " << st.seconds;
          hooks.log(os.str());
        }
      },
      false);
  return run;
}

} // namespace biot
