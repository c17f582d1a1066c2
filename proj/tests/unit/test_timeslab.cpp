#include "biot/errors.hpp"
#include "biot/problems.hpp"
#include "biot/timeslab.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace biot;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::shared_ptr<const SpatialProblem> make_problem(std::shared_ptr<const Mesh> mesh, int r,
                                                   const MaterialParams& params,
                                                   std::optional<LoadData> data) {
  auto V = std::make_shared<const FunctionSpace>(build_q_space(mesh, r, 2));
  auto Q = std::make_shared<const FunctionSpace>(build_p_disc_space(mesh, r - 1));
  return std::make_shared<const SpatialProblem>(make_spatial_problem(V, Q, params, std::move(data)));
}

ManufacturedCase small_case() {
  ManufacturedCase mc = ManufacturedCase::defaults(2);
  mc.base_cells = 2;
  return mc;
}

std::shared_ptr<const SpatialProblem> manufactured_problem() {
  const ManufacturedCase mc = small_case();
  return make_problem(std::make_shared<const Mesh>(mc.mesh(0)), 2, mc.params, mc.load_data());
}

SlabState zero_state(const SpatialProblem& sp, double t = 0.0) {
  return {Vector::Zero(sp.n_u()), Vector::Zero(sp.n_u()), Vector::Zero(sp.n_p()), t};
}

SlabState smooth_state(const SpatialProblem& sp) {
  SlabState s;
  s.u = interpolate(*sp.V, [](Point x, int c) {
    return (c == 0 ? 1.0 : -0.5) * std::sin(kPi * x.x) * std::sin(kPi * x.y);
  });
  s.v = interpolate(*sp.V, [](Point x, int c) { return c == 0 ? x.x * (1 - x.x) * x.y : 0.0; });
  s.p = interpolate(*sp.Q, [](Point x, int) { return std::cos(kPi * x.x) * x.y; });
  return s;
}

Eigen::MatrixXd dense(const SparseMatrix& A) { return Eigen::MatrixXd(A); }

struct DenseStep {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd rhs;
};

// One backward Euler step of M u' = M v, Mv v' + A u + C p = F, Mp p' - C^T v + B p = G.
DenseStep backward_euler(const SpatialProblem& sp, const SlabState& s, double t0, double t1) {
  const SystemMatrices& m = sp.matrices;
  const int nu = sp.n_u(), np = sp.n_p();
  const double tau = t1 - t0;
  const Eigen::MatrixXd M = dense(m.mass_u), Mv = dense(m.mass_v), Mp = dense(m.mass_p),
                        A = dense(m.A), C = dense(m.C), B = dense(m.B);
  DenseStep st;
  st.matrix = Eigen::MatrixXd::Zero(2 * nu + np, 2 * nu + np);
  st.matrix.block(0, 0, nu, nu) = M;
  st.matrix.block(0, nu, nu, nu) = -tau * M;
  st.matrix.block(nu, 0, nu, nu) = tau * A;
  st.matrix.block(nu, nu, nu, nu) = Mv;
  st.matrix.block(nu, 2 * nu, nu, np) = tau * C;
  st.matrix.block(2 * nu, nu, np, nu) = -tau * C.transpose();
  st.matrix.block(2 * nu, 2 * nu, np, np) = Mp + tau * B;
  const auto [F, G] = (*sp.loads)(t1);
  st.rhs.resize(2 * nu + np);
  st.rhs << M * s.u, Mv * s.v + tau * F, Mp * s.p + tau * G;
  return st;
}

// One trapezoidal step of the same system.
DenseStep trapezoid(const SpatialProblem& sp, const SlabState& s, double t0, double t1) {
  const SystemMatrices& m = sp.matrices;
  const int nu = sp.n_u(), np = sp.n_p();
  const double h = 0.5 * (t1 - t0);
  const Eigen::MatrixXd M = dense(m.mass_u), Mv = dense(m.mass_v), Mp = dense(m.mass_p),
                        A = dense(m.A), C = dense(m.C), B = dense(m.B);
  DenseStep st;
  st.matrix = Eigen::MatrixXd::Zero(2 * nu + np, 2 * nu + np);
  st.matrix.block(0, 0, nu, nu) = M;
  st.matrix.block(0, nu, nu, nu) = -h * M;
  st.matrix.block(nu, 0, nu, nu) = h * A;
  st.matrix.block(nu, nu, nu, nu) = Mv;
  st.matrix.block(nu, 2 * nu, nu, np) = h * C;
  st.matrix.block(2 * nu, nu, np, nu) = -h * C.transpose();
  st.matrix.block(2 * nu, 2 * nu, np, np) = Mp + h * B;
  const auto [F0, G0] = (*sp.loads)(t0);
  const auto [F1, G1] = (*sp.loads)(t1);
  st.rhs.resize(2 * nu + np);
  st.rhs << M * s.u + h * (M * s.v), Mv * s.v - h * (A * s.u + C * s.p) + h * (F0 + F1),
      Mp * s.p - h * (-C.transpose() * s.v + B * s.p) + h * (G0 + G1);
  return st;
}

SlabState unpack(const SpatialProblem& sp, const Eigen::VectorXd& x, double t) {
  const int nu = sp.n_u(), np = sp.n_p();
  return {x.head(nu), x.segment(nu, nu), x.tail(np), t};
}

double relative_max(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

double state_difference(const SlabState& a, const SlabState& b) {
  const double scale = std::max({b.u.norm(), b.v.norm(), b.p.norm(), 1e-300});
  return std::max({(a.u - b.u).norm(), (a.v - b.v).norm(), (a.p - b.p).norm()}) / scale;
}

SolverOptions direct() {
  SolverOptions o;
  o.kind = SolverKind::Direct;
  return o;
}

} // namespace

TEST(SchemeConfig, Validation) {
  SchemeConfig c;
  c.scheme = TimeScheme::cG;
  c.k = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c.k = 1;
  EXPECT_NO_THROW(c.validate());
  c.n_slabs = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = SchemeConfig{};
  EXPECT_DOUBLE_EQ(c.tau(), 0.1);
  EXPECT_THROW(cg_discretization(0), InvalidArgument);
  EXPECT_THROW(dg_discretization(-1), InvalidArgument);
}

TEST(TemporalDiscretization, ConstantsHaveZeroDerivative) {
  for (int k = 0; k <= 4; ++k) {
    for (TimeScheme s : {TimeScheme::dG, TimeScheme::cG}) {
      if (s == TimeScheme::cG && k == 0) continue;
      const TemporalDiscretization td = make_discretization(s, k);
      const Eigen::VectorXd row_sums = td.D.rowwise().sum() + td.d0;
      EXPECT_LT(row_sums.cwiseAbs().maxCoeff(), 1e-12) << to_string(s) << k;
    }
  }
}

TEST(TemporalDiscretization, CondensedCgMatchesDgDimension) {
  const auto sp = manufactured_problem();
  const SlabState s = zero_state(*sp);
  for (int k = 0; k <= 3; ++k) {
    EXPECT_EQ(make_discretization(TimeScheme::cG, k + 1).n_unknown(),
              make_discretization(TimeScheme::dG, k).n_unknown());
    EXPECT_EQ(build_cg_slab(*sp, s, k + 1, 0.0, 0.1).matrix.rows(),
              build_dg_slab(*sp, s, k, 0.0, 0.1).matrix.rows());
    EXPECT_EQ(build_dg_slab(*sp, s, k, 0.0, 0.1).matrix.rows(), (k + 1) * (2 * sp->n_u() + sp->n_p()));
  }
}

TEST(DgSlab, LowestOrderIsBackwardEuler) {
  const auto sp = manufactured_problem();
  const SlabState s = smooth_state(*sp);
  const SlabSystem sys = build_dg_slab(*sp, s, 0, 0.2, 0.3);
  const DenseStep be = backward_euler(*sp, s, 0.2, 0.3);
  EXPECT_LT(relative_max(dense(sys.matrix.assemble()), be.matrix), 1e-12);
  EXPECT_LT(relative_max(sys.rhs, be.rhs), 1e-12);
}

TEST(CgSlab, LowestOrderIsTrapezoid) {
  const auto sp = manufactured_problem();
  const SlabState s = smooth_state(*sp);
  const SlabSystem sys = build_cg_slab(*sp, s, 1, 0.2, 0.3);
  const DenseStep tr = trapezoid(*sp, s, 0.2, 0.3);
  EXPECT_LT(relative_max(dense(sys.matrix.assemble()), tr.matrix), 1e-12);
  EXPECT_LT(relative_max(sys.rhs, tr.rhs), 1e-12);
}

TEST(Advance, TrajectoriesMatchOneStepSchemes) {
  const auto sp = manufactured_problem();
  for (TimeScheme scheme : {TimeScheme::dG, TimeScheme::cG}) {
    SchemeConfig cfg{scheme, scheme == TimeScheme::dG ? 0 : 1, 4, 0.8};
    const Trajectory tr = advance(cfg, sp, smooth_state(*sp), direct());
    SlabState s = smooth_state(*sp);
    for (int n = 1; n <= 4; ++n) {
      const double t0 = (n - 1) * cfg.tau(), t1 = n * cfg.tau();
      const DenseStep st = scheme == TimeScheme::dG ? backward_euler(*sp, s, t0, t1) : trapezoid(*sp, s, t0, t1);
      s = unpack(*sp, st.matrix.partialPivLu().solve(st.rhs), t1);
      EXPECT_LT(state_difference(tr.end_states[n - 1], s), 1e-10) << to_string(scheme) << " slab " << n;
    }
  }
}

TEST(Advance, ZeroDataGivesZeroSolution) {
  const ManufacturedCase mc = small_case();
  const auto sp = make_problem(std::make_shared<const Mesh>(mc.mesh(0)), 2, mc.params, std::nullopt);
  for (TimeScheme scheme : {TimeScheme::dG, TimeScheme::cG}) {
    const Trajectory tr = advance({scheme, 2, 3, 0.3}, sp, zero_state(*sp));
    for (const SlabSolution& slab : tr.slabs) {
      for (Field f : {Field::U, Field::V, Field::P}) {
        for (const Vector& c : slab.coefficients(f)) EXPECT_EQ(c.norm(), 0.0);
      }
    }
  }
}

TEST(Advance, PolynomialInTimeSolutionReproduced) {
  // u = a(t) U(x), v = a'(t) U(x), p = b(t) P(x) with U in Q2^2 and P in P1
  const int r = 2, k = 2;
  auto mesh = std::make_shared<const Mesh>(unit_square_mesh(2));
  MaterialParams prm;
  prm.with_default_penalties(r);
  prm.K << 2.0, 0.5, 0.5, 1.0;
  // a moderate penalty keeps roundoff below the tolerance
  prm.gamma_a = 100;
  const double mu = prm.mu, lambda = prm.lambda, alpha = prm.alpha, rho = prm.rho, c0 = prm.c0;
  auto a = [](double t) { return 1 + t + t * t; };
  auto da = [](double t) { return 1 + 2 * t; };
  auto b = [](double t) { return 2 - t + 0.5 * t * t; };
  auto db = [](double t) { return -1 + t; };
  auto U = [](Point x) { return std::array<double, 2>{x.x * x.x + x.x * x.y, x.y * x.y - 2 * x.x * x.y + x.x}; };
  auto P = [](Point x) { return 1 + 2 * x.x - x.y; };
  auto scaled = [](std::array<double, 2> w, double s) { return std::array<double, 2>{s * w[0], s * w[1]}; };
  LoadData data;
  data.body_force = [=](Point x, double t) {
    const auto Ux = U(x);
    // rho u'' - div(C eps(u)) + alpha grad p with div(C eps(U)) = (2 mu, 5 mu + 3 lambda)
    return std::array<double, 2>{rho * 2 * Ux[0] - a(t) * 2 * mu + alpha * b(t) * 2,
                                 rho * 2 * Ux[1] - a(t) * (5 * mu + 3 * lambda) - alpha * b(t)};
  };
  // c0 p' + alpha div v - div(K grad p) with div U = 3y and K grad P constant
  data.pressure_source = [=](Point x, double t) { return c0 * db(t) * P(x) + alpha * da(t) * 3 * x.y; };
  data.displacement_bc = [=](Point x, double t) { return scaled(U(x), a(t)); };
  data.velocity_bc = [=](Point x, double t) { return scaled(U(x), da(t)); };
  data.traction = [](Point, double) { return std::array<double, 2>{0, 0}; };
  data.pressure_bc = [=](Point x, double t) { return b(t) * P(x); };
  data.flux_bc = [](Point, double) { return 0.0; };
  const auto sp = make_problem(mesh, r, prm, data);
  auto exact_state = [&](double t) {
    SlabState s;
    s.u = interpolate(*sp->V, [&](Point x, int c) { return a(t) * U(x)[c]; });
    s.v = interpolate(*sp->V, [&](Point x, int c) { return da(t) * U(x)[c]; });
    s.p = interpolate(*sp->Q, [&](Point x, int) { return b(t) * P(x); });
    s.t = t;
    return s;
  };
  for (TimeScheme scheme : {TimeScheme::dG, TimeScheme::cG}) {
    const Trajectory tr = advance({scheme, k, 3, 0.6}, sp, exact_state(0.0), direct());
    for (int n = 1; n <= 3; ++n) {
      EXPECT_LT(state_difference(tr.end_states[n - 1], exact_state(0.2 * n)), 1e-8)
          << to_string(scheme) << " slab " << n;
      const SlabSolution& slab = tr.slabs[n - 1];
      const double tm = slab.t_start + 0.37 * (slab.t_end - slab.t_start);
      const SlabState e = exact_state(tm);
      EXPECT_LT((slab.evaluate(Field::U, tm) - e.u).norm(), 1e-8 * e.u.norm());
    }
  }
}

TEST(Advance, SteadySolutionStaysConstant) {
  const int r = 2;
  auto mesh = std::make_shared<const Mesh>(unit_square_mesh(2));
  MaterialParams prm;
  prm.with_default_penalties(r);
  const double mu = prm.mu, lambda = prm.lambda, alpha = prm.alpha;
  auto U = [](Point x) { return std::array<double, 2>{x.x * x.x + x.x * x.y, x.y * x.y - 2 * x.x * x.y + x.x}; };
  auto P = [](Point x) { return 1 + 2 * x.x - x.y; };
  LoadData data = LoadData::zero();
  data.body_force = [=](Point, double) {
    return std::array<double, 2>{-2 * mu + 2 * alpha, -5 * mu - 3 * lambda - alpha};
  };
  data.displacement_bc = [=](Point x, double) { return U(x); };
  data.pressure_bc = [=](Point x, double) { return P(x); };
  const auto sp = make_problem(mesh, r, prm, data);
  SlabState s0 = zero_state(*sp);
  s0.u = interpolate(*sp->V, [&](Point x, int c) { return U(x)[c]; });
  s0.p = interpolate(*sp->Q, [&](Point x, int) { return P(x); });
  for (TimeScheme scheme : {TimeScheme::dG, TimeScheme::cG}) {
    const Trajectory tr = advance({scheme, 2, 2, 1.0}, sp, s0);
    for (const SlabSolution& slab : tr.slabs) {
      for (std::size_t j = 0; j < slab.u.size(); ++j) {
        EXPECT_LT((slab.u[j] - s0.u).norm(), 1e-8 * s0.u.norm());
        EXPECT_LT((slab.p[j] - s0.p).norm(), 1e-8 * s0.p.norm());
        EXPECT_LT(slab.v[j].norm(), 1e-8 * s0.u.norm());
      }
    }
  }
}

TEST(Advance, CgContinuityIsExact) {
  const auto sp = manufactured_problem();
  const Trajectory tr = advance({TimeScheme::cG, 3, 4, 0.4}, sp, smooth_state(*sp));
  SlabState prev = tr.initial;
  for (const SlabSolution& slab : tr.slabs) {
    EXPECT_EQ(slab.u.front(), prev.u);
    EXPECT_EQ(slab.v.front(), prev.v);
    EXPECT_EQ(slab.p.front(), prev.p);
    EXPECT_EQ(slab.evaluate(Field::U, slab.t_start), prev.u);
    prev = slab.end_state();
  }
}

TEST(Advance, DgEnergyNonIncreasingWithoutLoads) {
  const ManufacturedCase mc = small_case();
  const auto sp = make_problem(std::make_shared<const Mesh>(mc.mesh(0)), 2, mc.params, std::nullopt);
  const SlabState s0 = smooth_state(*sp);
  for (int k = 0; k <= 2; ++k) {
    const Trajectory tr = advance({TimeScheme::dG, k, 50, 0.5}, sp, s0, {}, {}, false);
    double last = discrete_energy(*sp, s0.u, s0.v, s0.p);
    EXPECT_GT(last, 0.0);
    for (const SlabState& s : tr.end_states) {
      const double e = discrete_energy(*sp, s.u, s.v, s.p);
      EXPECT_LE(e, last * (1 + 1e-12)) << "k=" << k << " t=" << s.t;
      last = e;
    }
    EXPECT_LT(last, discrete_energy(*sp, s0.u, s0.v, s0.p));
  }
}

TEST(Advance, BackwardEulerIsFirstOrderInTime) {
  // temporal error against a fine dG(2) reference on the same spatial discretization; heavy
  // inertia and a moderate penalty keep all spatial modes resolved by the step sizes used
  ManufacturedCase mc = small_case();
  mc.params.rho = 100.0;
  mc.params.gamma_a = 100.0;
  const auto sp = make_problem(std::make_shared<const Mesh>(mc.mesh(0)), 2, mc.params, mc.load_data());
  const double T = 0.5;
  const SlabState ref = advance({TimeScheme::dG, 2, 1024, T}, sp, zero_state(*sp), {}, {}, false).end_states.back();
  std::vector<double> errors;
  for (int n : {128, 256, 512}) {
    const SlabState s = advance({TimeScheme::dG, 0, n, T}, sp, zero_state(*sp), {}, {}, false).end_states.back();
    errors.push_back(state_difference(s, ref));
  }
  for (double rate : eoc(errors)) {
    EXPECT_GT(rate, 0.8);
    EXPECT_LT(rate, 1.25);
  }
}

TEST(Advance, SingleSlabEqualsDirectSolve) {
  const auto sp = manufactured_problem();
  const SlabState s0 = smooth_state(*sp);
  const Trajectory tr = advance({TimeScheme::dG, 2, 1, 0.1}, sp, s0);
  SlabSolver solver(sp, dg_discretization(2));
  const SlabSolution direct_solution = solver.solve(s0, 0.0, 0.1);
  for (int j = 0; j < 3; ++j) {
    EXPECT_LT((tr.slabs[0].u[j] - direct_solution.u[j]).norm(), 1e-12 * direct_solution.u[j].norm());
  }
}

TEST(Advance, SolverKindsAgreeOnBenchmarkSlabs) {
  const BenchmarkCase bc = BenchmarkCase::defaults(2);
  auto mesh = std::make_shared<const Mesh>(bc.mesh(0));
  auto V = std::make_shared<const FunctionSpace>(build_q_space(mesh, 2, 2));
  auto Q = std::make_shared<const FunctionSpace>(build_p_disc_space(mesh, 1));
  const auto sp = std::make_shared<const SpatialProblem>(
      make_spatial_problem(V, Q, bc.params, bc.load_data(), bc.assembly));
  for (TimeScheme scheme : {TimeScheme::dG, TimeScheme::cG}) {
    const SchemeConfig cfg{scheme, scheme == TimeScheme::dG ? 1 : 2, 2, 2 * bc.tau0};
    std::vector<Trajectory> runs;
    for (SolverKind kind : {SolverKind::Direct, SolverKind::Gmres, SolverKind::Diagonalized}) {
      SolverOptions o;
      o.kind = kind;
      runs.push_back(advance(cfg, sp, zero_state(*sp), o));
    }
    const double tol = std::max(1e-8, 10 * GmresOptions{}.rel_tol);
    for (std::size_t i = 1; i < runs.size(); ++i) {
      for (int n = 0; n < 2; ++n) {
        EXPECT_LT(state_difference(runs[i].end_states[n], runs[0].end_states[n]), tol)
            << to_string(scheme) << " solver " << i << " slab " << n + 1;
      }
    }
    EXPECT_GT(runs[0].end_states.back().u.norm(), 0.0);
  }
}

TEST(Advance, FailingSlabReportsIndex) {
  const auto sp = manufactured_problem();
  SolverOptions o;
  o.kind = SolverKind::Gmres;
  o.gmres.max_iter = 1;
  o.gmres.restart = 1;
  o.direct_fallback = false;
  try {
    advance({TimeScheme::dG, 1, 3, 0.3}, sp, smooth_state(*sp), o);
    FAIL() << "expected SlabFailure";
  } catch (const SlabFailure& e) {
    EXPECT_EQ(e.slab(), 1);
  }
}

TEST(EvaluateAtTime, EndpointsLimitsAndRange) {
  const auto sp = manufactured_problem();
  const SlabState s0 = smooth_state(*sp);
  for (TimeScheme scheme : {TimeScheme::dG, TimeScheme::cG}) {
    const Trajectory tr = advance({scheme, 2, 4, 0.4}, sp, s0);
    EXPECT_EQ(evaluate_at_time(tr, *sp, 0.0, Field::U).coefficients, s0.u);
    for (int n = 1; n <= 4; ++n) {
      const double tn = tr.slabs[n - 1].t_end;
      EXPECT_EQ(evaluate_at_time(tr, *sp, tn, Field::P).coefficients, tr.slabs[n - 1].p.back());
      EXPECT_EQ(tr.end_states[n - 1].p, tr.slabs[n - 1].p.back());
    }
    // one-sided limits at t_1
    const double t1 = tr.slabs[0].t_end;
    const Vector left = evaluate_at_time(tr, *sp, t1, Field::V).coefficients;
    const Vector right = tr.slabs[1].evaluate(Field::V, t1);
    if (scheme == TimeScheme::dG) {
      EXPECT_GT((left - right).norm(), 0.0);
    } else {
      EXPECT_EQ(left, right);
    }
    EXPECT_THROW(evaluate_at_time(tr, *sp, 0.5, Field::U), InvalidArgument);
    EXPECT_THROW(evaluate_at_time(tr, *sp, -0.1, Field::U), InvalidArgument);
  }
}

TEST(EvaluateAtTime, ConstantSlabIsConstant) {
  SlabSolution s;
  s.scheme = TimeScheme::dG;
  s.k = 2;
  s.t_start = 1.0;
  s.t_end = 1.5;
  s.nodes = gauss_radau_right(3).points;
  const Vector c = Vector::LinSpaced(4, 1.0, 2.0);
  s.u = s.v = s.p = {c, c, c};
  EXPECT_LT((s.evaluate(Field::U, 1.2) - c).norm(), 1e-14);
  EXPECT_LT((s.evaluate(Field::P, 1.0) - c).norm(), 1e-14);
}

TEST(Checkpoint, HeaderAndRows) {
  const auto sp = manufactured_problem();
  const Trajectory tr = advance({TimeScheme::cG, 2, 1, 0.1}, sp, smooth_state(*sp));
  std::ostringstream os;
  write_checkpoint(os, tr.slabs[0], 1, 2);
  std::istringstream in(os.str());
  std::string header;
  std::getline(in, header);
  EXPECT_NE(header.find("scheme=cG"), std::string::npos);
  EXPECT_NE(header.find(" k=2"), std::string::npos);
  EXPECT_NE(header.find(" r=2"), std::string::npos);
  EXPECT_NE(header.find(" slab=1"), std::string::npos);
  EXPECT_NE(header.find(" t_n=0.1"), std::string::npos);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string name;
    int j;
    ls >> name >> j;
    int count = 0;
    double x;
    while (ls >> x) ++count;
    EXPECT_EQ(count, name == "p" ? sp->n_p() : sp->n_u());
    ++rows;
  }
  EXPECT_EQ(rows, 9);
}
