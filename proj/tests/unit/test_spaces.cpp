#include "biot/errors.hpp"
#include "biot/quadrature.hpp"
#include "biot/spaces.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace biot;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::shared_ptr<const Mesh> square(int n) { return std::make_shared<const Mesh>(unit_square_mesh(n)); }

std::vector<Point> gauss_points(int n, std::vector<double>* weights = nullptr) {
  const QuadRule g = gauss_legendre(n);
  std::vector<Point> pts;
  if (weights) weights->clear();
  for (std::size_t j = 0; j < g.size(); ++j) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      pts.push_back({g.points[i], g.points[j]});
      if (weights) weights->push_back(g.weights[i] * g.weights[j]);
    }
  }
  return pts;
}

// L^2 error of an FE function against a scalar field, with 6x6 Gauss points per cell.
double l2_error(const FunctionSpace& space, const Eigen::VectorXd& c,
                const std::function<double(Point)>& f) {
  std::vector<double> w;
  const auto pts = gauss_points(6, &w);
  double s = 0.0;
  for (int cell = 0; cell < static_cast<int>(space.mesh().n_cells()); ++cell) {
    const Cell& K = space.mesh().cells()[cell];
    const BasisValues bv = eval_basis(space, cell, pts);
    const auto dofs = space.cell_dofs(cell);
    for (std::size_t q = 0; q < pts.size(); ++q) {
      double uh = 0.0;
      for (int i = 0; i < space.n_local(); ++i) uh += bv.values(q, i) * c[dofs[i]];
      const double e = uh - f(FunctionSpace::to_physical(K, pts[q]));
      s += w[q] * e * e * K.area() / 4.0;
    }
  }
  return std::sqrt(s);
}

} // namespace

TEST(QSpace, NodeCounts) {
  EXPECT_EQ(build_q_space(square(2), 2, 1).n_dofs(), 25);
  EXPECT_EQ(build_q_space(square(2), 2, 2).n_dofs(), 50);
  EXPECT_EQ(build_q_space(square(1), 4, 1).n_dofs(), 25);
  EXPECT_EQ(ReferenceElement::lagrange_q(3).n_basis(), 16);
}

TEST(QSpace, RejectsLowDegree) { EXPECT_THROW(build_q_space(square(2), 1, 2), InvalidArgument); }

TEST(QSpace, BlockedComponentNumbering) {
  const FunctionSpace V = build_q_space(square(2), 2, 2);
  for (int cell = 0; cell < 4; ++cell) {
    for (int i = 0; i < V.n_local(); ++i) EXPECT_EQ(V.dof(cell, i, 1), V.dof(cell, i, 0) + 25);
  }
}

TEST(PSpace, ModeCounts) {
  EXPECT_EQ(build_p_disc_space(square(4), 3).n_dofs(), 160);
  // the 14-cell level-0 L-shape with P1
  EXPECT_EQ(build_p_disc_space(std::make_shared<const Mesh>(l_shaped_mesh(0)), 1).n_dofs(), 42);
  for (int d = 1; d <= 5; ++d) EXPECT_EQ(ReferenceElement::broken_p(d).n_basis(), (d + 1) * (d + 2) / 2);
}

TEST(PSpace, RejectsDegreeZero) { EXPECT_THROW(build_p_disc_space(square(2), 0), InvalidArgument); }

TEST(PSpace, ReferenceMassIsIdentity) {
  for (int d = 1; d <= 4; ++d) {
    const ReferenceElement e = ReferenceElement::broken_p(d);
    std::vector<double> w;
    const auto pts = gauss_points(d + 2, &w);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(e.n_basis(), e.n_basis());
    for (std::size_t q = 0; q < pts.size(); ++q) {
      for (int i = 0; i < e.n_basis(); ++i) {
        for (int j = 0; j < e.n_basis(); ++j) {
          M(i, j) += w[q] * e.value(i, pts[q].x, pts[q].y) * e.value(j, pts[q].x, pts[q].y);
        }
      }
    }
    EXPECT_LT((M - Eigen::MatrixXd::Identity(e.n_basis(), e.n_basis())).norm(), 1e-12);
  }
}

TEST(PSpace, NoSharedDofs) {
  const FunctionSpace Q = build_p_disc_space(square(3), 2);
  std::vector<int> seen(Q.n_dofs(), 0);
  for (int c = 0; c < 9; ++c) {
    for (int d : Q.cell_dofs(c)) ++seen[d];
  }
  for (int s : seen) EXPECT_EQ(s, 1);
  EXPECT_EQ(Q.n_dofs(), 9 * 6);
}

TEST(EvalBasis, LagrangeAtOwnNodes) {
  const FunctionSpace V = build_q_space(square(1), 2, 1);
  std::vector<Point> nodes;
  for (int i = 0; i < V.n_local(); ++i) nodes.push_back(V.element().node(i));
  const BasisValues bv = eval_basis(V, 0, nodes);
  EXPECT_LT((bv.values - Eigen::MatrixXd::Identity(9, 9)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(EvalBasis, PartitionOfUnity) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int r = 2; r <= 5; ++r) {
    const FunctionSpace V = build_q_space(square(2), r, 1);
    std::vector<Point> pts;
    for (int k = 0; k < 20; ++k) pts.push_back({u(rng), u(rng)});
    const BasisValues bv = eval_basis(V, 3, pts);
    for (int q = 0; q < 20; ++q) {
      EXPECT_NEAR(bv.values.row(q).sum(), 1.0, 1e-13);
      EXPECT_NEAR(bv.grad_x.row(q).sum(), 0.0, 1e-11);
      EXPECT_NEAR(bv.grad_y.row(q).sum(), 0.0, 1e-11);
    }
  }
}

TEST(EvalBasis, LinearInterpolantHasExactGradient) {
  auto space = std::make_shared<const FunctionSpace>(build_q_space(square(3), 3, 1));
  const Eigen::VectorXd c = interpolate(*space, [](Point x, int) { return 2.0 * x.x - 3.0 * x.y + 1; });
  const FEFunction f(space, c);
  for (int cell = 0; cell < 9; ++cell) {
    for (Point p : {Point{-0.3, 0.2}, Point{0.9, -0.7}}) {
      const auto g = f.gradient(cell, p);
      EXPECT_NEAR(g[0], 2.0, 1e-12);
      EXPECT_NEAR(g[1], -3.0, 1e-12);
    }
  }
}

TEST(EvalBasis, RejectsOutOfRangePoints) {
  const FunctionSpace V = build_q_space(square(1), 2, 1);
  const std::vector<Point> bad{{1.5, 0.0}};
  EXPECT_THROW(eval_basis(V, 0, bad), InvalidArgument);
}

TEST(Interpolate, ReproducesLocalPolynomialSpace) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int r = 2; r <= 4; ++r) {
    auto V = std::make_shared<const FunctionSpace>(build_q_space(square(3), r, 2));
    for (int a = 0; a <= r; ++a) {
      for (int b = 0; b <= r; ++b) {
        auto mono = [a, b](Point x, int comp) { return std::pow(x.x, a) * std::pow(x.y, b) * (comp + 1); };
        const FEFunction f(V, interpolate(*V, mono));
        for (int k = 0; k < 10; ++k) {
          const int cell = static_cast<int>(rng() % 9);
          const Point ref{2 * u(rng) - 1, 2 * u(rng) - 1};
          const Point x = FunctionSpace::to_physical(V->mesh().cells()[cell], ref);
          for (int comp = 0; comp < 2; ++comp) {
            EXPECT_NEAR(f.value(cell, ref, comp), mono(x, comp), 1e-11);
          }
        }
      }
    }
  }
  for (int d = 1; d <= 3; ++d) {
    auto Q = std::make_shared<const FunctionSpace>(build_p_disc_space(square(2), d));
    for (int a = 0; a <= d; ++a) {
      for (int b = 0; a + b <= d; ++b) {
        auto mono = [a, b](Point x, int) { return std::pow(x.x, a) * std::pow(x.y, b); };
        const FEFunction f(Q, interpolate(*Q, mono));
        for (int k = 0; k < 10; ++k) {
          const int cell = static_cast<int>(rng() % 4);
          const Point ref{2 * u(rng) - 1, 2 * u(rng) - 1};
          const Point x = FunctionSpace::to_physical(Q->mesh().cells()[cell], ref);
          EXPECT_NEAR(f.value(cell, ref), mono(x, 0), 1e-11);
        }
      }
    }
  }
}

TEST(Interpolate, ZeroAndConstant) {
  const FunctionSpace Q = build_p_disc_space(square(2), 2);
  EXPECT_EQ(interpolate(Q, [](Point, int) { return 0.0; }).norm(), 0.0);
  const Eigen::VectorXd c = interpolate(Q, [](Point, int) { return 3.5; });
  EXPECT_LT(l2_error(Q, c, [](Point) { return 3.5; }), 1e-13);
}

TEST(Interpolate, ProjectionConvergesAtFourthOrder) {
  auto f = [](Point x) { return std::sin(kPi * x.x) * std::sin(kPi * x.y); };
  std::vector<double> errors;
  for (int n : {4, 8, 16}) {
    const FunctionSpace Q = build_p_disc_space(square(n), 3);
    errors.push_back(l2_error(Q, interpolate(Q, [&](Point x, int) { return f(x); }), f));
  }
  for (std::size_t i = 1; i < errors.size(); ++i) {
    const double ratio = errors[i - 1] / errors[i];
    EXPECT_GT(ratio, 14.0);
    EXPECT_LT(ratio, 18.5);
  }
}

TEST(QSpace, ContinuityAcrossInteriorFaces) {
  std::mt19937 rng(3);
  std::normal_distribution<double> gauss;
  for (int r = 2; r <= 4; ++r) {
    auto mesh = std::make_shared<const Mesh>(l_shaped_mesh(1));
    auto V = std::make_shared<const FunctionSpace>(build_q_space(mesh, r, 2));
    Eigen::VectorXd c(V->n_dofs());
    for (int i = 0; i < c.size(); ++i) c[i] = gauss(rng);
    const FEFunction f(V, c);
    for (const Face& face : mesh->faces()) {
      if (face.at_boundary()) continue;
      const Point a = mesh->vertices()[face.vertices[0]], b = mesh->vertices()[face.vertices[1]];
      for (double s : {0.1, 0.37, 0.8}) {
        const Point x{a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)};
        const Cell& K0 = mesh->cells()[face.cells[0]];
        const Cell& K1 = mesh->cells()[face.cells[1]];
        for (int comp = 0; comp < 2; ++comp) {
          EXPECT_NEAR(f.value(face.cells[0], FunctionSpace::to_reference(K0, x), comp),
                      f.value(face.cells[1], FunctionSpace::to_reference(K1, x), comp), 1e-11);
        }
      }
    }
  }
}

TEST(DirectionalConstraints, RollersOnLShape) {
  auto mesh = std::make_shared<const Mesh>(l_shaped_mesh(0));
  const FunctionSpace V = build_q_space(mesh, 2, 2);
  const ConstraintSet cs = mark_directional_constraints(V);
  const int n = V.n_scalar_dofs();
  const auto& pts = V.support_points();
  for (int i = 0; i < n; ++i) {
    const bool bottom = std::abs(pts[i].y) < 1e-14;
    const bool left = std::abs(pts[i].x) < 1e-14;
    EXPECT_EQ(cs.count(i) == 1, left) << "x-component of node " << i;
    EXPECT_EQ(cs.count(n + i) == 1, bottom) << "y-component of node " << i;
  }
  // the corner (0,0) carries both constraints
  for (int i = 0; i < n; ++i) {
    if (std::abs(pts[i].x) < 1e-14 && std::abs(pts[i].y) < 1e-14) {
      EXPECT_EQ(cs.count(i), 1u);
      EXPECT_EQ(cs.count(n + i), 1u);
    }
  }
  for (const auto& [dof, value] : cs) EXPECT_EQ(value, 0.0);
}

TEST(DirectionalConstraints, EmptyWithoutRollers) {
  LShapeGeometry g;
  g.rollers.clear();
  const FunctionSpace V = build_q_space(std::make_shared<const Mesh>(l_shaped_mesh(0, g)), 2, 2);
  EXPECT_TRUE(mark_directional_constraints(V).empty());
  EXPECT_TRUE(mark_directional_constraints(build_q_space(square(2), 2, 2)).empty());
}

TEST(InfSup, DiscreteConstantBoundedAwayFromZero) {
  // sup_v (div v, q) / |v|_1 >= beta |q| on V_h with zero boundary values and mean-free Q_h
  const int r = 2;
  auto mesh = square(2);
  const FunctionSpace V = build_q_space(mesh, r, 2);
  const FunctionSpace Q = build_p_disc_space(mesh, r - 1);
  std::vector<double> w;
  const auto pts = gauss_points(r + 2, &w);
  const int nv = V.n_dofs(), nq = Q.n_dofs();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nv, nv), B = Eigen::MatrixXd::Zero(nv, nq),
                  M = Eigen::MatrixXd::Zero(nq, nq);
  for (int cell = 0; cell < 4; ++cell) {
    const double jac = mesh->cells()[cell].area() / 4.0;
    const BasisValues bv = eval_basis(V, cell, pts);
    const BasisValues bq = eval_basis(Q, cell, pts);
    const auto vd = V.cell_dofs(cell);
    const auto qd = Q.cell_dofs(cell);
    for (std::size_t q = 0; q < pts.size(); ++q) {
      const double wq = w[q] * jac;
      for (int i = 0; i < V.n_local(); ++i) {
        for (int j = 0; j < V.n_local(); ++j) {
          const double g = bv.grad_x(q, i) * bv.grad_x(q, j) + bv.grad_y(q, i) * bv.grad_y(q, j);
          for (int c = 0; c < 2; ++c) A(c * V.n_scalar_dofs() + vd[i], c * V.n_scalar_dofs() + vd[j]) += wq * g;
        }
        for (int j = 0; j < Q.n_local(); ++j) {
          B(vd[i], qd[j]) += wq * bv.grad_x(q, i) * bq.values(q, j);
          B(V.n_scalar_dofs() + vd[i], qd[j]) += wq * bv.grad_y(q, i) * bq.values(q, j);
        }
      }
      for (int i = 0; i < Q.n_local(); ++i) {
        for (int j = 0; j < Q.n_local(); ++j) M(qd[i], qd[j]) += wq * bq.values(q, i) * bq.values(q, j);
      }
    }
  }
  std::vector<int> interior;
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < V.n_scalar_dofs(); ++i) {
      const Point p = V.support_points()[i];
      if (p.x > 1e-12 && p.x < 1 - 1e-12 && p.y > 1e-12 && p.y < 1 - 1e-12) {
        interior.push_back(c * V.n_scalar_dofs() + i);
      }
    }
  }
  const int ni = static_cast<int>(interior.size());
  Eigen::MatrixXd Ai(ni, ni), Bi(ni, nq);
  for (int a = 0; a < ni; ++a) {
    for (int b = 0; b < ni; ++b) Ai(a, b) = A(interior[a], interior[b]);
    Bi.row(a) = B.row(interior[a]);
  }
  const Eigen::MatrixXd S = Bi.transpose() * Ai.llt().solve(Bi);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(S, M);
  const Eigen::VectorXd ev = es.eigenvalues();
  // the constant pressure is in the kernel; the next eigenvalue is beta^2
  EXPECT_LT(std::abs(ev[0]), 1e-10);
  EXPECT_GT(std::sqrt(ev[1]), 1e-3);
}
