#include "biot/spaces.hpp"

#include "biot/errors.hpp"

#include <cmath>
#include <utility>

namespace biot {

namespace {

double normalized_legendre(int n, double x) {
  return std::sqrt((2.0 * n + 1.0) / 2.0) * legendre(n, x).value;
}

double normalized_legendre_derivative(int n, double x) {
  return std::sqrt((2.0 * n + 1.0) / 2.0) * legendre(n, x).derivative;
}

} // namespace

ReferenceElement::ReferenceElement(ElementFamily family, int degree)
    : family_(family), degree_(degree) {}

ReferenceElement ReferenceElement::lagrange_q(int degree) {
  if (degree < 1) throw InvalidArgument("lagrange_q: degree must be positive");
  ReferenceElement e(ElementFamily::TensorLagrangeQ, degree);
  e.nodes_1d_ = gauss_lobatto(degree + 1).points;
  e.lagrange_ = LagrangeBasis1D(e.nodes_1d_);
  for (int b = 0; b <= degree; ++b) {
    for (int a = 0; a <= degree; ++a) e.modes_.push_back({a, b});
  }
  return e;
}

ReferenceElement ReferenceElement::broken_p(int degree) {
  if (degree < 0) throw InvalidArgument("broken_p: negative degree");
  ReferenceElement e(ElementFamily::BrokenP, degree);
  for (int d = 0; d <= degree; ++d) {
    for (int a = d; a >= 0; --a) e.modes_.push_back({a, d - a});
  }
  return e;
}

double ReferenceElement::value(int i, double xi, double eta) const {
  const auto [a, b] = modes_[i];
  if (family_ == ElementFamily::TensorLagrangeQ) {
    return lagrange_.value(a, xi) * lagrange_.value(b, eta);
  }
  return normalized_legendre(a, xi) * normalized_legendre(b, eta);
}

std::array<double, 2> ReferenceElement::gradient(int i, double xi, double eta) const {
  const auto [a, b] = modes_[i];
  if (family_ == ElementFamily::TensorLagrangeQ) {
    return {lagrange_.derivative(a, xi) * lagrange_.value(b, eta),
            lagrange_.value(a, xi) * lagrange_.derivative(b, eta)};
  }
  return {normalized_legendre_derivative(a, xi) * normalized_legendre(b, eta),
          normalized_legendre(a, xi) * normalized_legendre_derivative(b, eta)};
}

Point ReferenceElement::node(int i) const {
  if (family_ != ElementFamily::TensorLagrangeQ) throw InvalidArgument("node: not a nodal element");
  return {nodes_1d_[modes_[i][0]], nodes_1d_[modes_[i][1]]};
}

std::vector<int> ReferenceElement::face_nodes(int local_face) const {
  if (family_ != ElementFamily::TensorLagrangeQ) {
    throw InvalidArgument("face_nodes: not a nodal element");
  }
  const int r = degree_;
  std::vector<int> nodes;
  for (int m = 0; m <= r; ++m) {
    switch (local_face) {
    case 0:
      nodes.push_back(m);
      break;
    case 1:
      nodes.push_back(r + (r + 1) * m);
      break;
    case 2:
      nodes.push_back(m + (r + 1) * r);
      break;
    case 3:
      nodes.push_back((r + 1) * m);
      break;
    default:
      throw InvalidArgument("face_nodes: local face out of range");
    }
  }
  return nodes;
}

ReferenceTable tabulate(const ReferenceElement& element, std::span<const Point> points) {
  const int nq = static_cast<int>(points.size());
  const int nb = element.n_basis();
  ReferenceTable t{Eigen::MatrixXd(nq, nb), Eigen::MatrixXd(nq, nb), Eigen::MatrixXd(nq, nb)};
  for (int q = 0; q < nq; ++q) {
    for (int i = 0; i < nb; ++i) {
      t.values(q, i) = element.value(i, points[q].x, points[q].y);
      const auto g = element.gradient(i, points[q].x, points[q].y);
      t.dxi(q, i) = g[0];
      t.deta(q, i) = g[1];
    }
  }
  return t;
}

FunctionSpace::FunctionSpace(std::shared_ptr<const Mesh> mesh, ReferenceElement element,
                             int components)
    : mesh_(std::move(mesh)), element_(std::move(element)), components_(components) {
  if (components_ < 1 || components_ > 2) throw InvalidArgument("space: 1 or 2 components");
  const Mesh& m = *mesh_;
  const int nl = n_local();
  const int nc = static_cast<int>(m.n_cells());
  cell_dofs_.assign(static_cast<std::size_t>(nc) * nl, -1);

  if (!continuous()) {
    for (int c = 0; c < nc; ++c) {
      for (int i = 0; i < nl; ++i) cell_dofs_[c * nl + i] = c * nl + i;
    }
    n_scalar_dofs_ = nc * nl;
    return;
  }

  const int r = element_.degree();
  const int nv = static_cast<int>(m.vertices().size());
  const int nf = static_cast<int>(m.faces().size());
  const int edge_base = nv;
  const int cell_base = nv + nf * (r - 1);
  n_scalar_dofs_ = cell_base + nc * (r - 1) * (r - 1);
  support_points_.assign(n_scalar_dofs_, Point{});

  // start vertex (local corner) of each local face in parametric direction
  constexpr std::array<int, 4> face_start{0, 1, 3, 0};
  for (int c = 0; c < nc; ++c) {
    const Cell& cell = m.cells()[c];
    for (int b = 0; b <= r; ++b) {
      for (int a = 0; a <= r; ++a) {
        const int i = a + (r + 1) * b;
        int global = -1;
        const bool ea = (a == 0 || a == r);
        const bool eb = (b == 0 || b == r);
        if (ea && eb) {
          const int corner = (a == 0) ? (b == 0 ? 0 : 3) : (b == 0 ? 1 : 2);
          global = cell.vertices[corner];
        } else if (ea || eb) {
          int lf;
          int param;
          if (b == 0) {
            lf = 0;
            param = a;
          } else if (a == r) {
            lf = 1;
            param = b;
          } else if (b == r) {
            lf = 2;
            param = a;
          } else {
            lf = 3;
            param = b;
          }
          const int f = cell.faces[lf];
          const int start = cell.vertices[face_start[lf]];
          const int offset = (start == m.faces()[f].vertices[0]) ? param - 1 : r - param - 1;
          global = edge_base + f * (r - 1) + offset;
        } else {
          global = cell_base + c * (r - 1) * (r - 1) + (a - 1) + (r - 1) * (b - 1);
        }
        cell_dofs_[c * nl + i] = global;
        support_points_[global] = to_physical(cell, element_.node(i));
      }
    }
  }
}

std::span<const int> FunctionSpace::cell_dofs(int cell) const {
  return {cell_dofs_.data() + static_cast<std::size_t>(cell) * n_local(),
          static_cast<std::size_t>(n_local())};
}

Point FunctionSpace::to_reference(const Cell& cell, Point x) {
  return {2.0 * (x.x - cell.lower.x) / cell.width() - 1.0,
          2.0 * (x.y - cell.lower.y) / cell.height() - 1.0};
}

Point FunctionSpace::to_physical(const Cell& cell, Point ref) {
  return {cell.lower.x + 0.5 * (ref.x + 1.0) * cell.width(),
          cell.lower.y + 0.5 * (ref.y + 1.0) * cell.height()};
}

FunctionSpace build_q_space(std::shared_ptr<const Mesh> mesh, int r, int components) {
  if (r < 2) throw InvalidArgument("build_q_space: degree r must be at least 2");
  return FunctionSpace(std::move(mesh), ReferenceElement::lagrange_q(r), components);
}

FunctionSpace build_p_disc_space(std::shared_ptr<const Mesh> mesh, int degree) {
  if (degree < 1) throw InvalidArgument("build_p_disc_space: degree must be at least 1");
  return FunctionSpace(std::move(mesh), ReferenceElement::broken_p(degree), 1);
}

BasisValues eval_basis(const FunctionSpace& space, int cell, std::span<const Point> points) {
  for (const Point& p : points) {
    if (std::abs(p.x) > 1.0 + 1e-12 || std::abs(p.y) > 1.0 + 1e-12) {
      throw InvalidArgument("eval_basis: reference point outside [-1,1]^2");
    }
  }
  const Cell& c = space.mesh().cells().at(cell);
  const ReferenceTable t = tabulate(space.element(), points);
  return {t.values, t.dxi * (2.0 / c.width()), t.deta * (2.0 / c.height())};
}

FEFunction::FEFunction(std::shared_ptr<const FunctionSpace> s, Eigen::VectorXd c)
    : space(std::move(s)), coefficients(std::move(c)) {
  if (coefficients.size() != space->n_dofs()) {
    throw DimensionMismatch("FEFunction: coefficient vector length does not match the space");
  }
}

double FEFunction::value(int cell, Point ref, int component) const {
  const auto& e = space->element();
  double v = 0.0;
  for (int i = 0; i < space->n_local(); ++i) {
    v += coefficients[space->dof(cell, i, component)] * e.value(i, ref.x, ref.y);
  }
  return v;
}

std::array<double, 2> FEFunction::gradient(int cell, Point ref, int component) const {
  const auto& e = space->element();
  const Cell& c = space->mesh().cells()[cell];
  std::array<double, 2> g{0.0, 0.0};
  for (int i = 0; i < space->n_local(); ++i) {
    const auto gi = e.gradient(i, ref.x, ref.y);
    const double coef = coefficients[space->dof(cell, i, component)];
    g[0] += coef * gi[0] * 2.0 / c.width();
    g[1] += coef * gi[1] * 2.0 / c.height();
  }
  return g;
}

Eigen::VectorXd interpolate(const FunctionSpace& space, const FieldFunction& field) {
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(space.n_dofs());
  const int ns = space.n_scalar_dofs();
  if (space.continuous()) {
    for (int comp = 0; comp < space.components(); ++comp) {
      for (int d = 0; d < ns; ++d) coeffs[comp * ns + d] = field(space.support_points()[d], comp);
    }
    return coeffs;
  }
  // orthonormal reference basis: coefficients are reference-cell moments
  const QuadRule g = gauss_legendre(space.element().degree() + 4);
  std::vector<Point> pts;
  std::vector<double> wts;
  for (std::size_t j = 0; j < g.size(); ++j) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      pts.push_back({g.points[i], g.points[j]});
      wts.push_back(g.weights[i] * g.weights[j]);
    }
  }
  const ReferenceTable t = tabulate(space.element(), pts);
  for (int c = 0; c < static_cast<int>(space.mesh().n_cells()); ++c) {
    const Cell& cell = space.mesh().cells()[c];
    for (std::size_t q = 0; q < pts.size(); ++q) {
      const Point x = FunctionSpace::to_physical(cell, pts[q]);
      const double fv = field(x, 0);
      for (int i = 0; i < space.n_local(); ++i) {
        coeffs[space.dof(c, i, 0)] += wts[q] * fv * t.values(q, i);
      }
    }
  }
  return coeffs;
}

ConstraintSet mark_directional_constraints(const FunctionSpace& space) {
  if (!space.continuous() || space.components() != 2) {
    throw InvalidArgument("mark_directional_constraints: needs a continuous vector space");
  }
  ConstraintSet constraints;
  const Mesh& m = space.mesh();
  for (const Face& face : m.faces()) {
    if (!face.at_boundary() || face.u_tag != UBoundary::Directional) continue;
    int component;
    if (std::abs(face.normal.y) < 1e-14 && std::abs(std::abs(face.normal.x) - 1.0) < 1e-14) {
      component = 0;
    } else if (std::abs(face.normal.x) < 1e-14 &&
               std::abs(std::abs(face.normal.y) - 1.0) < 1e-14) {
      component = 1;
    } else {
      throw InvalidArgument("directional boundary faces must be axis-aligned");
    }
    for (int i : space.element().face_nodes(face.local_index[0])) {
      constraints[space.dof(face.cells[0], i, component)] = 0.0;
    }
  }
  return constraints;
}

} // namespace biot
