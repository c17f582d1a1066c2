#pragma once

#include "biot/mesh.hpp"
#include "biot/quadrature.hpp"

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <vector>

namespace biot {

enum class ElementFamily { TensorLagrangeQ, BrokenP };

/// Basis functions on the reference square [-1,1]^2.
///
/// TensorLagrangeQ: tensor-product Lagrange polynomials of degree r at the Gauss-Lobatto
/// points; local index i = a + (r+1) b for the node (x_a, x_b).
/// BrokenP: Legendre products L_a(xi) L_b(eta) with a + b <= degree, normalized to be
/// orthonormal in L^2([-1,1]^2). Modes are grouped by total degree.
class ReferenceElement {
public:
  static ReferenceElement lagrange_q(int degree);
  static ReferenceElement broken_p(int degree);

  ElementFamily family() const { return family_; }
  int degree() const { return degree_; }
  int n_basis() const { return static_cast<int>(modes_.size()); }

  double value(int i, double xi, double eta) const;
  std::array<double, 2> gradient(int i, double xi, double eta) const;

  /// Q only: reference support point of node i.
  Point node(int i) const;
  /// Q only: 1D node positions.
  const std::vector<double>& nodes_1d() const { return nodes_1d_; }
  /// Q only: local nodes on a local face, ordered along the face direction.
  std::vector<int> face_nodes(int local_face) const;

private:
  ReferenceElement(ElementFamily family, int degree);

  ElementFamily family_;
  int degree_;
  std::vector<std::array<int, 2>> modes_;
  std::vector<double> nodes_1d_;
  LagrangeBasis1D lagrange_;
};

/// Values and physical gradients of all local basis functions at a set of points.
struct BasisValues {
  Eigen::MatrixXd values; ///< points x basis
  Eigen::MatrixXd grad_x;
  Eigen::MatrixXd grad_y;
};

/// Reference-cell tabulation reused across cells (all cells share the affine structure).
struct ReferenceTable {
  Eigen::MatrixXd values;
  Eigen::MatrixXd dxi;
  Eigen::MatrixXd deta;
};
ReferenceTable tabulate(const ReferenceElement& element, std::span<const Point> reference_points);

/// Scalar or vector finite element space on a mesh. Vector spaces use blocked component
/// numbering: dof = component * n_scalar_dofs() + scalar_dof.
///
/// Continuous spaces number vertex nodes first, then edge nodes (ordered from the lower
/// face vertex to the upper one), then cell-interior nodes. Broken spaces number all modes of
/// cell 0, then cell 1, and so on.
class FunctionSpace {
public:
  FunctionSpace(std::shared_ptr<const Mesh> mesh, ReferenceElement element, int components);

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  const ReferenceElement& element() const { return element_; }
  int components() const { return components_; }
  bool continuous() const { return element_.family() == ElementFamily::TensorLagrangeQ; }

  int n_scalar_dofs() const { return n_scalar_dofs_; }
  int n_dofs() const { return components_ * n_scalar_dofs_; }
  int n_local() const { return element_.n_basis(); }

  std::span<const int> cell_dofs(int cell) const;
  int dof(int cell, int local, int component) const {
    return component * n_scalar_dofs_ + cell_dofs_[cell * n_local() + local];
  }

  /// Continuous spaces only: physical support point of each scalar dof.
  const std::vector<Point>& support_points() const { return support_points_; }

  static Point to_reference(const Cell& cell, Point x);
  static Point to_physical(const Cell& cell, Point reference);

private:
  std::shared_ptr<const Mesh> mesh_;
  ReferenceElement element_;
  int components_;
  int n_scalar_dofs_ = 0;
  std::vector<int> cell_dofs_;
  std::vector<Point> support_points_;
};

/// Continuous Q_r space with `components` components.
FunctionSpace build_q_space(std::shared_ptr<const Mesh> mesh, int r, int components);

/// Discontinuous total-degree space (scalar).
FunctionSpace build_p_disc_space(std::shared_ptr<const Mesh> mesh, int degree);

/// Basis values and physical gradients on `cell` at reference points in [-1,1]^2.
BasisValues eval_basis(const FunctionSpace& space, int cell,
                       std::span<const Point> reference_points);

/// Field callback: value of component `component` at point x.
using FieldFunction = std::function<double(Point x, int component)>;

struct FEFunction {
  std::shared_ptr<const FunctionSpace> space;
  Eigen::VectorXd coefficients;

  FEFunction(std::shared_ptr<const FunctionSpace> s, Eigen::VectorXd c);

  double value(int cell, Point reference, int component = 0) const;
  std::array<double, 2> gradient(int cell, Point reference, int component = 0) const;
};

/// Nodal interpolation (continuous spaces) or cellwise L^2 projection (broken spaces).
Eigen::VectorXd interpolate(const FunctionSpace& space, const FieldFunction& field);

/// Constrained dof -> prescribed value.
using ConstraintSet = std::map<int, double>;

/// Homogeneous normal-component constraints on all faces tagged Directional.
ConstraintSet mark_directional_constraints(const FunctionSpace& space);

} // namespace biot
