#include "biot/assembly.hpp"

#include "biot/errors.hpp"

#include <cmath>
#include <vector>

namespace biot {

namespace {

struct VolumeRule {
  std::vector<Point> points;
  std::vector<double> weights;
};

VolumeRule square_rule(int n) {
  const QuadRule g = gauss_legendre(n);
  VolumeRule rule;
  for (std::size_t j = 0; j < g.size(); ++j) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      rule.points.push_back({g.points[i], g.points[j]});
      rule.weights.push_back(g.weights[i] * g.weights[j]);
    }
  }
  return rule;
}

// Reference points on local face `lf`, parametrized by the 1D rule.
std::vector<Point> face_points(int lf, const QuadRule& g) {
  std::vector<Point> pts;
  for (double s : g.points) {
    switch (lf) {
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
  return pts;
}

int points_for(const FunctionSpace& V, const AssemblyOptions& options) {
  const int r = V.element().degree();
  if (options.quadrature_points == 0) return r + 1;
  if (options.quadrature_points < r + 1) {
    throw InvalidArgument("quadrature rule too weak: need at least r+1 points per direction");
  }
  return options.quadrature_points;
}

// Physical gradients of the reference table on a cell.
struct CellTable {
  Eigen::MatrixXd values;
  Eigen::MatrixXd gx;
  Eigen::MatrixXd gy;
};

CellTable on_cell(const ReferenceTable& t, const Cell& c) {
  return {t.values, t.dxi * (2.0 / c.width()), t.deta * (2.0 / c.height())};
}

SparseMatrix from_triplets(int rows, int cols, const std::vector<Triplet>& triplets) {
  SparseMatrix M(rows, cols);
  M.setFromTriplets(triplets.begin(), triplets.end());
  M.makeCompressed();
  return M;
}

std::array<double, 2> times(const Eigen::Matrix2d& K, double gx, double gy) {
  return {K(0, 0) * gx + K(0, 1) * gy, K(1, 0) * gx + K(1, 1) * gy};
}

} // namespace

double penalty_length(const Face& face, const AssemblyOptions& options) {
  return options.penalty_length == PenaltyLength::Harmonic ? face.h_normal : face.h_F;
}

MaterialParams& MaterialParams::with_default_penalties(int r) {
  gamma_a = 5.0e4 * r * (r + 1);
  gamma_b = 0.5 * r * (r - 1);
  return *this;
}

void MaterialParams::validate() const {
  if (!(rho > 0.0)) throw InvalidArgument("rho must be positive");
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  if (!(c0 > 0.0)) throw InvalidArgument("c0 must be positive");
  if (!(mu > 0.0)) throw InvalidArgument("mu must be positive");
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be non-negative");
  if (std::abs(K(0, 1) - K(1, 0)) > 1e-14 * K.norm()) {
    throw InvalidArgument("permeability must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(K);
  if (!(eig.eigenvalues().minCoeff() > 0.0)) {
    throw InvalidArgument("permeability must be positive definite");
  }
  if (!(gamma_a > 0.0)) throw InvalidArgument("gamma_a must be positive");
  if (!(gamma_b > 0.0)) throw InvalidArgument("gamma_b must be positive");
}

Lame lame_from_E_nu(double E, double nu) {
  if (!(E > 0.0)) throw InvalidArgument("Young's modulus must be positive");
  if (!(nu >= 0.0 && nu < 0.5)) throw InvalidArgument("Poisson ratio must lie in [0, 0.5)");
  return {E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)), E / (2.0 * (1.0 + nu))};
}

SparseMatrix assemble_mass(const FunctionSpace& space, double weight,
                           const AssemblyOptions& options) {
  const int nq = options.quadrature_points > 0 ? options.quadrature_points
                                               : space.element().degree() + 2;
  const VolumeRule rule = square_rule(nq);
  const ReferenceTable t = tabulate(space.element(), rule.points);
  const int nl = space.n_local();
  Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(nl, nl);
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    ref += rule.weights[q] * t.values.row(q).transpose() * t.values.row(q);
  }
  std::vector<Triplet> triplets;
  const Mesh& m = space.mesh();
  triplets.reserve(m.n_cells() * nl * nl * space.components());
  for (int c = 0; c < static_cast<int>(m.n_cells()); ++c) {
    const double jac = 0.25 * m.cells()[c].area() * weight;
    for (int comp = 0; comp < space.components(); ++comp) {
      for (int i = 0; i < nl; ++i) {
        for (int j = 0; j < nl; ++j) {
          triplets.emplace_back(space.dof(c, i, comp), space.dof(c, j, comp), jac * ref(i, j));
        }
      }
    }
  }
  return from_triplets(space.n_dofs(), space.n_dofs(), triplets);
}

SparseMatrix assemble_elasticity(const FunctionSpace& V, const MaterialParams& prm,
                                 const AssemblyOptions& options) {
  if (!V.continuous() || V.components() != 2) {
    throw InvalidArgument("assemble_elasticity: needs a continuous vector space");
  }
  const int nq = points_for(V, options);
  const VolumeRule rule = square_rule(nq);
  const ReferenceTable t = tabulate(V.element(), rule.points);
  const QuadRule g = gauss_legendre(nq);
  const Mesh& m = V.mesh();
  const int nl = V.n_local();
  const double mu = prm.mu, lambda = prm.lambda;
  std::vector<Triplet> triplets;
  triplets.reserve(m.n_cells() * 4 * nl * nl);
  Eigen::MatrixXd local(2 * nl, 2 * nl);

  for (int c = 0; c < static_cast<int>(m.n_cells()); ++c) {
    const Cell& cell = m.cells()[c];
    const CellTable ct = on_cell(t, cell);
    const double jac = 0.25 * cell.area();
    local.setZero();
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const double w = rule.weights[q] * jac;
      for (int i = 0; i < nl; ++i) {
        const double dxi = ct.gx(q, i), dyi = ct.gy(q, i);
        for (int j = 0; j < nl; ++j) {
          const double dxj = ct.gx(q, j), dyj = ct.gy(q, j);
          const double dot = dxi * dxj + dyi * dyj;
          // (test comp a, trial comp b): mu (delta_ab grad.grad + d_a phi_j d_b phi_i)
          //                              + lambda d_b phi_j d_a phi_i
          local(i, j) += w * (mu * (dot + dxj * dxi) + lambda * dxj * dxi);
          local(i, nl + j) += w * (mu * dxj * dyi + lambda * dyj * dxi);
          local(nl + i, j) += w * (mu * dyj * dxi + lambda * dxj * dyi);
          local(nl + i, nl + j) += w * (mu * (dot + dyj * dyi) + lambda * dyj * dyi);
        }
      }
    }
    for (int a = 0; a < 2; ++a) {
      for (int i = 0; i < nl; ++i) {
        for (int b = 0; b < 2; ++b) {
          for (int j = 0; j < nl; ++j) {
            triplets.emplace_back(V.dof(c, i, a), V.dof(c, j, b), local(a * nl + i, b * nl + j));
          }
        }
      }
    }
  }

  // Nitsche terms on Dirichlet faces
  for (const Face& face : m.faces()) {
    if (!face.at_boundary() || face.u_tag != UBoundary::Dirichlet) continue;
    const int c = face.cells[0];
    const Cell& cell = m.cells()[c];
    const std::vector<Point> pts = face_points(face.local_index[0], g);
    const CellTable ct = on_cell(tabulate(V.element(), pts), cell);
    const std::array<double, 2> n{face.normal.x, face.normal.y};
    const double penalty = prm.gamma_a / penalty_length(face, options);
    local.setZero();
    for (std::size_t q = 0; q < pts.size(); ++q) {
      const double w = g.weights[q] * 0.5 * face.measure;
      for (int i = 0; i < nl; ++i) {
        const double pi = ct.values(q, i);
        const std::array<double, 2> gi{ct.gx(q, i), ct.gy(q, i)};
        const double dni = gi[0] * n[0] + gi[1] * n[1];
        for (int j = 0; j < nl; ++j) {
          const double pj = ct.values(q, j);
          const std::array<double, 2> gj{ct.gx(q, j), ct.gy(q, j)};
          const double dnj = gj[0] * n[0] + gj[1] * n[1];
          for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
              const double delta = a == b ? 1.0 : 0.0;
              // -<sigma(w) n, chi>, w = phi_j e_b, chi = phi_i e_a
              const double consistency =
                  -pi * (mu * (delta * dnj + n[b] * gj[a]) + lambda * gj[b] * n[a]);
              const double symmetry =
                  -pj * (mu * (delta * dni + n[a] * gi[b]) + lambda * gi[a] * n[b]);
              local(a * nl + i, b * nl + j) +=
                  w * (consistency + symmetry + penalty * delta * pi * pj);
            }
          }
        }
      }
    }
    for (int a = 0; a < 2; ++a) {
      for (int i = 0; i < nl; ++i) {
        for (int b = 0; b < 2; ++b) {
          for (int j = 0; j < nl; ++j) {
            triplets.emplace_back(V.dof(c, i, a), V.dof(c, j, b), local(a * nl + i, b * nl + j));
          }
        }
      }
    }
  }
  return from_triplets(V.n_dofs(), V.n_dofs(), triplets);
}

SparseMatrix assemble_coupling(const FunctionSpace& V, const FunctionSpace& Q,
                               const MaterialParams& prm, const AssemblyOptions& options) {
  if (V.mesh_ptr() != Q.mesh_ptr()) throw InvalidArgument("assemble_coupling: mesh mismatch");
  if (V.components() != 2 || Q.components() != 1) {
    throw InvalidArgument("assemble_coupling: expects vector x scalar spaces");
  }
  const int nq = points_for(V, options);
  const VolumeRule rule = square_rule(nq);
  const ReferenceTable tv = tabulate(V.element(), rule.points);
  const ReferenceTable tq = tabulate(Q.element(), rule.points);
  const QuadRule g = gauss_legendre(nq);
  const Mesh& m = V.mesh();
  const int nv = V.n_local(), np = Q.n_local();
  std::vector<Triplet> triplets;
  triplets.reserve(m.n_cells() * 2 * nv * np);
  Eigen::MatrixXd local(2 * nv, np);

  for (int c = 0; c < static_cast<int>(m.n_cells()); ++c) {
    const Cell& cell = m.cells()[c];
    const CellTable ct = on_cell(tv, cell);
    const double jac = 0.25 * cell.area();
    local.setZero();
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const double w = -prm.alpha * rule.weights[q] * jac;
      for (int i = 0; i < nv; ++i) {
        for (int j = 0; j < np; ++j) {
          local(i, j) += w * ct.gx(q, i) * tq.values(q, j);
          local(nv + i, j) += w * ct.gy(q, i) * tq.values(q, j);
        }
      }
    }
    for (int a = 0; a < 2; ++a) {
      for (int i = 0; i < nv; ++i) {
        for (int j = 0; j < np; ++j) {
          triplets.emplace_back(V.dof(c, i, a), Q.dof(c, j, 0), local(a * nv + i, j));
        }
      }
    }
  }
  for (const Face& face : m.faces()) {
    if (!face.at_boundary() || face.u_tag != UBoundary::Dirichlet) continue;
    const int c = face.cells[0];
    const std::vector<Point> pts = face_points(face.local_index[0], g);
    const ReferenceTable fv = tabulate(V.element(), pts);
    const ReferenceTable fq = tabulate(Q.element(), pts);
    const std::array<double, 2> n{face.normal.x, face.normal.y};
    for (int a = 0; a < 2; ++a) {
      for (int i = 0; i < nv; ++i) {
        for (int j = 0; j < np; ++j) {
          double s = 0.0;
          for (std::size_t q = 0; q < pts.size(); ++q) {
            s += g.weights[q] * 0.5 * face.measure * fv.values(q, i) * n[a] * fq.values(q, j);
          }
          triplets.emplace_back(V.dof(c, i, a), Q.dof(c, j, 0), prm.alpha * s);
        }
      }
    }
  }
  return from_triplets(V.n_dofs(), Q.n_dofs(), triplets);
}

SparseMatrix assemble_pressure_sipg(const FunctionSpace& Q, const MaterialParams& prm,
                                    const AssemblyOptions& options) {
  if (Q.continuous() || Q.components() != 1) {
    throw InvalidArgument("assemble_pressure_sipg: needs a broken scalar space");
  }
  if (!(prm.gamma_b > 0.0)) throw InvalidArgument("assemble_pressure_sipg: gamma_b must be > 0");
  const int nq = options.quadrature_points > 0 ? options.quadrature_points
                                               : Q.element().degree() + 2;
  const VolumeRule rule = square_rule(nq);
  const ReferenceTable t = tabulate(Q.element(), rule.points);
  const QuadRule g = gauss_legendre(nq);
  const Mesh& m = Q.mesh();
  const int np = Q.n_local();
  const Eigen::Matrix2d& K = prm.K;
  std::vector<Triplet> triplets;
  Eigen::MatrixXd local(np, np);

  for (int c = 0; c < static_cast<int>(m.n_cells()); ++c) {
    const Cell& cell = m.cells()[c];
    const CellTable ct = on_cell(t, cell);
    const double jac = 0.25 * cell.area();
    local.setZero();
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const double w = rule.weights[q] * jac;
      for (int i = 0; i < np; ++i) {
        for (int j = 0; j < np; ++j) {
          const auto Kgj = times(K, ct.gx(q, j), ct.gy(q, j));
          local(i, j) += w * (Kgj[0] * ct.gx(q, i) + Kgj[1] * ct.gy(q, i));
        }
      }
    }
    for (int i = 0; i < np; ++i) {
      for (int j = 0; j < np; ++j) triplets.emplace_back(Q.dof(c, i, 0), Q.dof(c, j, 0), local(i, j));
    }
  }

  for (const Face& face : m.faces()) {
    const bool dirichlet = face.at_boundary() && face.p_tag == PBoundary::Dirichlet;
    if (face.at_boundary() && !dirichlet) continue;
    const int sides = face.at_boundary() ? 1 : 2;
    const double penalty = prm.gamma_b / penalty_length(face, options);
    const double avg = face.at_boundary() ? 1.0 : 0.5;
    const std::array<double, 2> n{face.normal.x, face.normal.y};
    const std::vector<Point> owner_pts = face_points(face.local_index[0], g);

    // traces on each side at the common physical quadrature points
    std::vector<Eigen::MatrixXd> val(sides), flux(sides);
    for (int s = 0; s < sides; ++s) {
      const Cell& cell = m.cells()[face.cells[s]];
      std::vector<Point> pts = owner_pts;
      if (s == 1) {
        const Cell& owner = m.cells()[face.cells[0]];
        for (Point& p : pts) p = FunctionSpace::to_reference(cell, FunctionSpace::to_physical(owner, p));
      }
      const CellTable ct = on_cell(tabulate(Q.element(), pts), cell);
      val[s] = ct.values;
      flux[s].resize(pts.size(), np);
      for (std::size_t q = 0; q < pts.size(); ++q) {
        for (int i = 0; i < np; ++i) {
          const auto Kg = times(K, ct.gx(q, i), ct.gy(q, i));
          flux[s](q, i) = Kg[0] * n[0] + Kg[1] * n[1];
        }
      }
    }
    for (int s = 0; s < sides; ++s) {
      const double sign_s = s == 0 ? 1.0 : -1.0;
      for (int t2 = 0; t2 < sides; ++t2) {
        const double sign_t = t2 == 0 ? 1.0 : -1.0;
        local.setZero();
        for (std::size_t q = 0; q < g.size(); ++q) {
          const double w = g.weights[q] * 0.5 * face.measure;
          for (int i = 0; i < np; ++i) {
            for (int j = 0; j < np; ++j) {
              const double term = -avg * flux[t2](q, j) * sign_s * val[s](q, i) -
                                  sign_t * val[t2](q, j) * avg * flux[s](q, i) +
                                  penalty * sign_s * sign_t * val[s](q, i) * val[t2](q, j);
              local(i, j) += w * term;
            }
          }
        }
        for (int i = 0; i < np; ++i) {
          for (int j = 0; j < np; ++j) {
            triplets.emplace_back(Q.dof(face.cells[s], i, 0), Q.dof(face.cells[t2], j, 0),
                                  local(i, j));
          }
        }
      }
    }
  }
  return from_triplets(Q.n_dofs(), Q.n_dofs(), triplets);
}

SystemMatrices assemble_system(const FunctionSpace& V, const FunctionSpace& Q,
                               const MaterialParams& params, const AssemblyOptions& options) {
  params.validate();
  SystemMatrices s;
  s.mass_u = assemble_mass(V, 1.0, options);
  s.mass_v = params.rho * s.mass_u;
  s.mass_p = assemble_mass(Q, params.c0, options);
  s.A = assemble_elasticity(V, params, options);
  s.C = assemble_coupling(V, Q, params, options);
  s.B = assemble_pressure_sipg(Q, params, options);
  return s;
}

LoadData LoadData::zero() {
  LoadData d;
  auto zero_vec = [](Point, double) { return std::array<double, 2>{0.0, 0.0}; };
  auto zero_scalar = [](Point, double) { return 0.0; };
  d.body_force = zero_vec;
  d.displacement_bc = zero_vec;
  d.velocity_bc = zero_vec;
  d.traction = zero_vec;
  d.pressure_source = zero_scalar;
  d.pressure_bc = zero_scalar;
  d.flux_bc = zero_scalar;
  return d;
}

LoadAssembler::LoadAssembler(std::shared_ptr<const FunctionSpace> V,
                             std::shared_ptr<const FunctionSpace> Q, MaterialParams params,
                             LoadData data, const AssemblyOptions& options)
    : V_(std::move(V)), Q_(std::move(Q)), params_(std::move(params)), data_(std::move(data)),
      options_(options) {
  nq_ = points_for(*V_, options);
  if (!data_.body_force) throw InvalidArgument("load data: missing body force");
  if (!data_.pressure_source) throw InvalidArgument("load data: missing pressure source");
  for (const Face& f : V_->mesh().faces()) {
    if (!f.at_boundary()) continue;
    if (f.u_tag == UBoundary::Dirichlet && (!data_.displacement_bc || !data_.velocity_bc)) {
      throw InvalidArgument("load data: missing displacement/velocity data on Dirichlet faces");
    }
    if (f.u_tag == UBoundary::Neumann && !data_.traction) {
      throw InvalidArgument("load data: missing traction on Neumann faces");
    }
    if (f.p_tag == PBoundary::Dirichlet && !data_.pressure_bc) {
      throw InvalidArgument("load data: missing pressure Dirichlet data");
    }
    if (f.p_tag == PBoundary::Neumann && !data_.flux_bc) {
      throw InvalidArgument("load data: missing pressure flux data");
    }
  }
}

std::pair<Vector, Vector> LoadAssembler::operator()(double t) const {
  const FunctionSpace& V = *V_;
  const FunctionSpace& Q = *Q_;
  const Mesh& m = V.mesh();
  const int nv = V.n_local(), np = Q.n_local();
  const VolumeRule rule = square_rule(nq_);
  const ReferenceTable tv = tabulate(V.element(), rule.points);
  const ReferenceTable tq = tabulate(Q.element(), rule.points);
  const QuadRule g = gauss_legendre(nq_);
  const double mu = params_.mu, lambda = params_.lambda;
  const Eigen::Matrix2d& K = params_.K;

  Vector F = Vector::Zero(V.n_dofs());
  Vector G = Vector::Zero(Q.n_dofs());

  for (int c = 0; c < static_cast<int>(m.n_cells()); ++c) {
    const Cell& cell = m.cells()[c];
    const double jac = 0.25 * cell.area();
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Point x = FunctionSpace::to_physical(cell, rule.points[q]);
      const double w = rule.weights[q] * jac;
      const auto f = data_.body_force(x, t);
      const double gs = data_.pressure_source(x, t);
      for (int i = 0; i < nv; ++i) {
        F[V.dof(c, i, 0)] += w * f[0] * tv.values(q, i);
        F[V.dof(c, i, 1)] += w * f[1] * tv.values(q, i);
      }
      for (int j = 0; j < np; ++j) G[Q.dof(c, j, 0)] += w * gs * tq.values(q, j);
    }
  }

  for (const Face& face : m.faces()) {
    if (!face.at_boundary()) continue;
    const int c = face.cells[0];
    const Cell& cell = m.cells()[c];
    const std::vector<Point> pts = face_points(face.local_index[0], g);
    const CellTable cv = on_cell(tabulate(V.element(), pts), cell);
    const CellTable cq = on_cell(tabulate(Q.element(), pts), cell);
    const std::array<double, 2> n{face.normal.x, face.normal.y};
    for (std::size_t q = 0; q < pts.size(); ++q) {
      const Point x = FunctionSpace::to_physical(cell, pts[q]);
      const double w = g.weights[q] * 0.5 * face.measure;
      if (face.u_tag == UBoundary::Neumann) {
        const auto tn = data_.traction(x, t);
        for (int i = 0; i < nv; ++i) {
          F[V.dof(c, i, 0)] -= w * tn[0] * cv.values(q, i);
          F[V.dof(c, i, 1)] -= w * tn[1] * cv.values(q, i);
        }
      } else if (face.u_tag == UBoundary::Dirichlet) {
        const auto uD = data_.displacement_bc(x, t);
        const auto vD = data_.velocity_bc(x, t);
        const double penalty = params_.gamma_a / penalty_length(face, options_);
        const double uDn = uD[0] * n[0] + uD[1] * n[1];
        for (int i = 0; i < nv; ++i) {
          const double pi = cv.values(q, i);
          const std::array<double, 2> gi{cv.gx(q, i), cv.gy(q, i)};
          const double dni = gi[0] * n[0] + gi[1] * n[1];
          const double uDgi = uD[0] * gi[0] + uD[1] * gi[1];
          for (int a = 0; a < 2; ++a) {
            // a_gamma(u_D, phi_i e_a) = -<u_D, sigma(phi_i e_a) n> + gamma_a/h <u_D, phi_i e_a>
            const double sym = -(mu * (uD[a] * dni + n[a] * uDgi) + lambda * gi[a] * uDn);
            F[V.dof(c, i, a)] += w * (sym + penalty * uD[a] * pi);
          }
        }
        const double vDn = vD[0] * n[0] + vD[1] * n[1];
        for (int j = 0; j < np; ++j) {
          G[Q.dof(c, j, 0)] -= w * params_.alpha * vDn * cq.values(q, j);
        }
      }
      if (face.p_tag == PBoundary::Dirichlet) {
        const double pD = data_.pressure_bc(x, t);
        const double penalty = params_.gamma_b / penalty_length(face, options_);
        for (int j = 0; j < np; ++j) {
          const auto Kg = times(K, cq.gx(q, j), cq.gy(q, j));
          const double flux = Kg[0] * n[0] + Kg[1] * n[1];
          G[Q.dof(c, j, 0)] += w * pD * (penalty * cq.values(q, j) - flux);
        }
      } else if (face.p_tag == PBoundary::Neumann) {
        const double pN = data_.flux_bc(x, t);
        for (int j = 0; j < np; ++j) G[Q.dof(c, j, 0)] -= w * pN * cq.values(q, j);
      }
    }
  }
  return {std::move(F), std::move(G)};
}

std::pair<Vector, Vector> assemble_loads(const FunctionSpace& V, const FunctionSpace& Q,
                                         const MaterialParams& params, const LoadData& data,
                                         double t, const AssemblyOptions& options) {
  // non-owning handles: the assembler does not outlive this call
  const std::shared_ptr<const FunctionSpace> v(std::shared_ptr<void>{}, &V);
  const std::shared_ptr<const FunctionSpace> q(std::shared_ptr<void>{}, &Q);
  return LoadAssembler(v, q, params, data, options)(t);
}

} // namespace biot
