#pragma once

#include "biot/assembly.hpp"
#include "biot/mesh.hpp"
#include "biot/timeslab.hpp"

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace biot {

/// Exact fields of a space-time problem, used for initial data and error norms.
struct ExactSolution {
  VectorData u;
  VectorData v;
  /// (du1/dx, du1/dy, du2/dx, du2/dy)
  std::function<std::array<double, 4>(Point, double)> grad_u;
  ScalarData p;
};

/// phi = sin(w1 t^2) sin(w2 x) sin(w2 y) with u = (phi, phi), v = du/dt, p = phi on (0,1)^2.
struct ManufacturedCase {
  double omega1 = 3.14159265358979323846;
  double omega2 = 3.14159265358979323846;
  double E = 100.0;
  double nu = 0.35;
  MaterialParams params;
  double T = 2.0;
  /// Cells per side of the level-0 mesh (h_0 = sqrt(2) / base_cells).
  int base_cells = 4;
  double tau0 = 0.1;
  AssemblyOptions assembly;

  /// Reference parameters with Lame constants from (E, nu) and penalties for degree r.
  static ManufacturedCase defaults(int r);

  double phi(Point x, double t) const;
  std::array<double, 2> u(Point x, double t) const;
  std::array<double, 2> v(Point x, double t) const;
  double p(Point x, double t) const;
  std::array<double, 4> grad_u(Point x, double t) const;

  /// f with rho d2u/dt2 - div(C eps(u)) + alpha grad p = rho f.
  std::array<double, 2> body_force(Point x, double t) const;
  /// g = c0 dp/dt + alpha div(du/dt) - div(K grad p).
  double pressure_source(Point x, double t) const;

  ExactSolution exact() const;
  /// Dirichlet data for u, v and p on the whole boundary; the momentum load is rho f.
  LoadData load_data() const;
  Mesh mesh(int level) const;
  double tau(int level) const;
  int n_slabs(int level) const;
};

enum class TractionDirection { Vertical, Normal };

/// Spatial profile q of the traction pulse, defined on [0, 0.5].
double traction_profile(double x);

struct BenchmarkCase {
  double E = 20000.0;
  double nu = 0.3;
  MaterialParams params;
  double T = 8.0;
  /// 32 slabs per forcing period 0.25.
  double tau0 = 0.0078125;
  LShapeGeometry geometry;
  TractionDirection direction = TractionDirection::Vertical;
  AssemblyOptions assembly;

  static BenchmarkCase defaults(int r);

  /// t_N at a boundary point: q(x) sin(8 pi t) on the loaded top segment, zero elsewhere.
  std::array<double, 2> traction(Point x, double t) const;
  LoadData load_data() const;
  Mesh mesh(int level) const;
  double tau(int level) const;
  int n_slabs(int level) const;
};

struct ErrorNorms {
  double grad_u = 0.0;
  double v = 0.0;
  double p = 0.0;
};

enum class NormKind { GradU, V, P };

/// Accumulates space-time L2(L2) errors slab by slab.
class ErrorAccumulator {
public:
  /// Temporal Gauss points per slab default to k + 3, spatial points per direction to r + 3.
  ErrorAccumulator(const SpatialProblem& problem, ExactSolution exact, int temporal_points = 0,
                   int spatial_points = 0);

  void add(const SlabSolution& slab);
  ErrorNorms result() const;

private:
  const SpatialProblem* problem_;
  ExactSolution exact_;
  int temporal_points_;
  int spatial_points_;
  std::vector<Point> points_;
  std::vector<double> weights_;
  ReferenceTable table_v_;
  ReferenceTable table_p_;
  double sum_grad_u_ = 0.0, sum_v_ = 0.0, sum_p_ = 0.0;
};

double l2l2_error(const Trajectory& trajectory, const SpatialProblem& problem,
                  const ExactSolution& exact, NormKind kind);

/// log2(e_{j-1} / e_j) for consecutive entries.
std::vector<double> eoc(const std::vector<double>& errors);

struct GoalValues {
  double G_u = 0.0;
  double G_p = 0.0;
};

/// Boundary integrals of u.n and p over the faces marked as goal segment.
class GoalEvaluator {
public:
  GoalEvaluator(const FunctionSpace& V, const FunctionSpace& Q);
  GoalValues operator()(const Vector& u, const Vector& p) const;
  /// Total length of the goal segment.
  double length() const { return length_; }

private:
  struct FaceData {
    std::vector<int> u_dofs;
    std::vector<int> p_dofs;
    Eigen::MatrixXd u_weights; ///< 2 x n_local: integrated basis times normal components
    Eigen::VectorXd p_weights;
  };
  std::vector<FaceData> faces_;
  double length_ = 0.0;
};

GoalValues goal_quantities(const FEFunction& u, const FEFunction& p);

struct GoalSeries {
  std::vector<double> t;
  std::vector<double> G_u;
  std::vector<double> G_p;
};

struct GoalCharacteristics {
  double min_p = 0.0;
  double max_p = 0.0;
  double min_u = 0.0;
  double max_u = 0.0;
};

/// Extrema over [t_from, t_to]; the samples must cover the window with spacing at most
/// max_spacing (ignored if non-positive).
GoalCharacteristics goal_characteristics(const GoalSeries& series, double t_from, double t_to,
                                         double max_spacing = 0.0);

/// Dominant period of a uniformly sampled signal restricted to t >= t_from: the peak of the
/// Hann-windowed, zero-padded periodogram with parabolic refinement.
double dominant_period(const std::vector<double>& t, const std::vector<double>& values,
                       double t_from);

using LogSink = std::function<void(const std::string&)>;

/// Optional callbacks of the study drivers.
struct StudyHooks {
  LogSink log;
  /// After assembly of a level.
  std::function<void(int level, const Mesh& mesh, const SpatialProblem& problem)> on_setup;
  /// After every slab, with its 1-based index.
  std::function<void(int level, int slab, const SlabSolution& solution)> on_slab;
};

struct ConvergenceRow {
  int level = 0;
  double h = 0.0;
  double tau = 0.0;
  ErrorNorms errors;
};

std::vector<ConvergenceRow> run_convergence(const ManufacturedCase& mcase, TimeScheme scheme,
                                            int k, int r, const std::vector<int>& levels,
                                            const SolverOptions& solver,
                                            const StudyHooks& hooks = {});

struct BenchmarkRun {
  int level = 0;
  double h = 0.0;
  double tau = 0.0;
  GoalSeries series;
};

/// Samples per slab for goal series (equispaced, right endpoint included).
inline constexpr int kGoalSamplesPerSlab = 8;

BenchmarkRun run_benchmark(const BenchmarkCase& bcase, TimeScheme scheme, int k, int r, int level,
                           const SolverOptions& solver, const StudyHooks& hooks = {});

/// Same as run_benchmark with explicit slab length and final time.
BenchmarkRun run_benchmark(const BenchmarkCase& bcase, TimeScheme scheme, int k, int r, int level,
                           double tau, double T, const SolverOptions& solver,
                           const StudyHooks& hooks = {});

} // namespace biot
