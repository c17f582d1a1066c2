#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace biot {

enum class QuadKind { Legendre, RadauRight, Lobatto };

/// One-dimensional quadrature rule. Points are strictly increasing.
struct QuadRule {
  std::vector<double> points;
  std::vector<double> weights;
  QuadKind kind = QuadKind::Legendre;

  std::size_t size() const { return points.size(); }
};

/// n-point Gauss-Legendre rule on [-1,1], exact up to degree 2n-1.  1 <= n <= 20.
QuadRule gauss_legendre(int n);

/// n-point right-sided Gauss-Radau rule on [-1,1] (contains +1), exact up to degree 2n-2.
/// 1 <= n <= 12.
QuadRule gauss_radau_right(int n);

/// n-point Gauss-Lobatto rule on [-1,1] (contains both endpoints), exact up to degree 2n-3.
/// 2 <= n <= 12.
QuadRule gauss_lobatto(int n);

/// Affine image of a [-1,1] rule on [t_start, t_end].
QuadRule map_to_interval(const QuadRule& rule, double t_start, double t_end);

/// Highest polynomial degree integrated exactly by a rule of the given kind and size.
int exactness_degree(QuadKind kind, int n);

/// Legendre polynomial P_n and its derivative at x.
struct LegendreValue {
  double value;
  double derivative;
};
LegendreValue legendre(int n, double x);

/// Lagrange polynomials over a fixed set of distinct nodes.
class LagrangeBasis1D {
public:
  LagrangeBasis1D() = default;
  explicit LagrangeBasis1D(std::vector<double> nodes);

  std::size_t size() const { return nodes_.size(); }
  const std::vector<double>& nodes() const { return nodes_; }

  double value(std::size_t i, double x) const;
  double derivative(std::size_t i, double x) const;

private:
  std::vector<double> nodes_;
  std::vector<double> denominators_;
};

} // namespace biot
