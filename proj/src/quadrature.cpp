#include "biot/quadrature.hpp"

#include "biot/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>

namespace biot {

namespace {

using Real = long double;

struct PolyEval {
  Real value;
  Real derivative;
};

// Three-term recurrence for P_n, P_n' and P_{n-1}.
void legendre_triplet(int n, Real x, Real& pn, Real& dpn, Real& pnm1) {
  Real p0 = 1.0L;
  Real p1 = x;
  if (n == 0) {
    pn = 1.0L;
    dpn = 0.0L;
    pnm1 = 0.0L;
    return;
  }
  for (int m = 2; m <= n; ++m) {
    const Real p2 = ((2 * m - 1) * x * p1 - (m - 1) * p0) / m;
    p0 = p1;
    p1 = p2;
  }
  pn = p1;
  pnm1 = p0;
  // P_n' from the derivative recurrence, valid on the closed interval
  if (std::abs(1.0L - x * x) > 1e-30L) {
    dpn = n * (x * pn - pnm1) / (x * x - 1.0L);
  } else {
    const Real s = (x > 0 || n % 2 == 1) ? 1.0L : -1.0L;
    dpn = s * n * (n + 1) / 2.0L;
  }
}

Real legendre_value(int n, Real x) {
  Real pn, dpn, pnm1;
  legendre_triplet(n, x, pn, dpn, pnm1);
  return pn;
}

// Newton iteration with deflation against already located roots.
std::vector<Real> find_roots(const std::function<PolyEval(Real)>& f, std::vector<Real> known,
                             const std::vector<Real>& guesses) {
  std::vector<Real> roots;
  for (Real x : guesses) {
    for (int it = 0; it < 200; ++it) {
      const PolyEval fe = f(x);
      Real shift = 0.0L;
      for (Real r : known) shift += 1.0L / (x - r);
      const Real denom = fe.derivative - fe.value * shift;
      if (denom == 0.0L) break;
      const Real dx = fe.value / denom;
      x -= dx;
      if (std::abs(dx) < 1e-19L) break;
    }
    // polish on the undeflated polynomial
    for (int it = 0; it < 3; ++it) {
      const PolyEval fe = f(x);
      if (fe.derivative == 0.0L) break;
      x -= fe.value / fe.derivative;
    }
    const Real residual = std::abs(f(x).value);
    if (!(residual < 1e-15L)) {
      throw Error("quadrature node iteration failed to reach residual tolerance");
    }
    known.push_back(x);
    roots.push_back(x);
  }
  return roots;
}

std::vector<Real> chebyshev_guesses(int m) {
  std::vector<Real> g(m);
  for (int i = 0; i < m; ++i) {
    g[i] = std::cos(std::numbers::pi_v<Real> * (i + 0.5L) / m);
  }
  return g;
}

QuadRule finish(std::vector<std::pair<Real, Real>> nodes, QuadKind kind) {
  std::sort(nodes.begin(), nodes.end());
  QuadRule rule;
  rule.kind = kind;
  for (auto [x, w] : nodes) {
    rule.points.push_back(static_cast<double>(x));
    rule.weights.push_back(static_cast<double>(w));
  }
  return rule;
}

void check_range(int n, int lo, int hi, const char* name) {
  if (n < lo || n > hi) {
    throw InvalidArgument(std::string(name) + ": number of points " + std::to_string(n) +
                          " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
}

} // namespace

LegendreValue legendre(int n, double x) {
  Real pn, dpn, pnm1;
  legendre_triplet(n, x, pn, dpn, pnm1);
  return {static_cast<double>(pn), static_cast<double>(dpn)};
}

QuadRule gauss_legendre(int n) {
  check_range(n, 1, 20, "gauss_legendre");
  auto f = [n](Real x) {
    Real pn, dpn, pnm1;
    legendre_triplet(n, x, pn, dpn, pnm1);
    return PolyEval{pn, dpn};
  };
  std::vector<Real> guesses(n);
  for (int i = 0; i < n; ++i) {
    guesses[i] = std::cos(std::numbers::pi_v<Real> * (i + 0.75L) / (n + 0.5L));
  }
  std::vector<std::pair<Real, Real>> nodes;
  for (Real x : find_roots(f, {}, guesses)) {
    const Real d = f(x).derivative;
    nodes.emplace_back(x, 2.0L / ((1.0L - x * x) * d * d));
  }
  return finish(std::move(nodes), QuadKind::Legendre);
}

QuadRule gauss_radau_right(int n) {
  check_range(n, 1, 12, "gauss_radau_right");
  // nodes are the zeros of P_n - P_{n-1}; x = 1 is always one of them
  auto f = [n](Real x) {
    Real pn, dpn, pnm1;
    legendre_triplet(n, x, pn, dpn, pnm1);
    Real qn, dqn, qnm1;
    legendre_triplet(n - 1, x, qn, dqn, qnm1);
    return PolyEval{pn - qn, dpn - dqn};
  };
  const Real nn = static_cast<Real>(n) * n;
  std::vector<std::pair<Real, Real>> nodes{{1.0L, 2.0L / nn}};
  for (Real x : find_roots(f, {1.0L}, chebyshev_guesses(n - 1))) {
    const Real p = legendre_value(n - 1, x);
    nodes.emplace_back(x, (1.0L + x) / (nn * p * p));
  }
  return finish(std::move(nodes), QuadKind::RadauRight);
}

QuadRule gauss_lobatto(int n) {
  check_range(n, 2, 12, "gauss_lobatto");
  const int m = n - 1;
  // interior nodes are the zeros of P_m'; P_m'' follows from the Legendre equation
  auto f = [m](Real x) {
    Real pn, dpn, pnm1;
    legendre_triplet(m, x, pn, dpn, pnm1);
    const Real d2 = (2.0L * x * dpn - m * (m + 1) * pn) / (1.0L - x * x);
    return PolyEval{dpn, d2};
  };
  const Real scale = 2.0L / (static_cast<Real>(n) * (n - 1));
  std::vector<std::pair<Real, Real>> nodes{{-1.0L, scale}, {1.0L, scale}};
  std::vector<Real> guesses(n - 2);
  for (int i = 0; i < n - 2; ++i) {
    guesses[i] = std::cos(std::numbers::pi_v<Real> * (i + 1) / (n - 1));
  }
  for (Real x : find_roots(f, {}, guesses)) {
    const Real p = legendre_value(m, x);
    nodes.emplace_back(x, scale / (p * p));
  }
  return finish(std::move(nodes), QuadKind::Lobatto);
}

QuadRule map_to_interval(const QuadRule& rule, double t_start, double t_end) {
  if (!(t_start < t_end)) {
    throw InvalidArgument("map_to_interval: empty interval");
  }
  const double mid = 0.5 * (t_start + t_end);
  const double half = 0.5 * (t_end - t_start);
  QuadRule mapped = rule;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    mapped.points[q] = mid + half * rule.points[q];
    mapped.weights[q] = half * rule.weights[q];
  }
  // keep endpoints exact
  if (!rule.points.empty() && rule.points.back() == 1.0) mapped.points.back() = t_end;
  if (!rule.points.empty() && rule.points.front() == -1.0) mapped.points.front() = t_start;
  return mapped;
}

int exactness_degree(QuadKind kind, int n) {
  switch (kind) {
  case QuadKind::Legendre:
    return 2 * n - 1;
  case QuadKind::RadauRight:
    return 2 * n - 2;
  case QuadKind::Lobatto:
    return 2 * n - 3;
  }
  return 0;
}

LagrangeBasis1D::LagrangeBasis1D(std::vector<double> nodes) : nodes_(std::move(nodes)) {
  denominators_.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    double d = 1.0;
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
      if (j != i) d *= nodes_[i] - nodes_[j];
    }
    if (d == 0.0) throw InvalidArgument("LagrangeBasis1D: repeated nodes");
    denominators_[i] = d;
  }
}

double LagrangeBasis1D::value(std::size_t i, double x) const {
  double v = 1.0;
  for (std::size_t j = 0; j < nodes_.size(); ++j) {
    if (j != i) v *= x - nodes_[j];
  }
  return v / denominators_[i];
}

double LagrangeBasis1D::derivative(std::size_t i, double x) const {
  double sum = 0.0;
  for (std::size_t m = 0; m < nodes_.size(); ++m) {
    if (m == i) continue;
    double prod = 1.0;
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
      if (j != i && j != m) prod *= x - nodes_[j];
    }
    sum += prod;
  }
  return sum / denominators_[i];
}

} // namespace biot
