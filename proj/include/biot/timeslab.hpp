#pragma once

#include "biot/assembly.hpp"
#include "biot/linalg.hpp"
#include "biot/spaces.hpp"

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace biot {

enum class TimeScheme { dG, cG };

std::string to_string(TimeScheme scheme);

struct SchemeConfig {
  TimeScheme scheme = TimeScheme::dG;
  int k = 2;
  int n_slabs = 20;
  double T = 2.0;

  double tau() const { return T / n_slabs; }
  void validate() const;
};

/// Temporal matrices of one slab on the reference interval [-1,1].
///
/// Unknown nodal vectors X_j (j over unknown trial nodes) satisfy, per test function i,
///   sum_j D_ij Mass X_j + (tau/2) sum_j What_ij Op X_j
///     = (tau/2) sum_l Lhat_il load(t_l) - d0_i Mass X^- - (tau/2) w0hat_i Op X^-
/// where X^- is the incoming state.
struct TemporalDiscretization {
  TimeScheme scheme = TimeScheme::dG;
  int k = 0;
  /// Reference nodes of the full trial basis (k+1 points).
  std::vector<double> trial_nodes;
  /// Index of the first unknown trial node: 0 for dG, 1 for cG.
  int first_unknown = 0;
  Eigen::MatrixXd D;
  Eigen::MatrixXd W_hat;
  Eigen::VectorXd d0;
  Eigen::VectorXd w0_hat;
  /// Reference times where loads are sampled and their weights per test function.
  std::vector<double> load_nodes;
  Eigen::MatrixXd L_hat;

  int n_unknown() const { return static_cast<int>(D.cols()); }
};

TemporalDiscretization dg_discretization(int k);
TemporalDiscretization cg_discretization(int k);
TemporalDiscretization make_discretization(TimeScheme scheme, int k);

/// Spatial ingredients shared by all slabs.
struct SpatialProblem {
  std::shared_ptr<const FunctionSpace> V;
  std::shared_ptr<const FunctionSpace> Q;
  MaterialParams params;
  SystemMatrices matrices;
  /// Strongly constrained vector dofs (homogeneous), applied to u and v.
  std::vector<int> constrained;
  /// Load functionals; empty means zero loads.
  std::shared_ptr<const LoadAssembler> loads;

  int n_u() const { return V->n_dofs(); }
  int n_p() const { return Q->n_dofs(); }
};

/// Assembles matrices and constraints for given spaces, parameters and data.
SpatialProblem make_spatial_problem(std::shared_ptr<const FunctionSpace> V,
                                    std::shared_ptr<const FunctionSpace> Q,
                                    const MaterialParams& params,
                                    std::optional<LoadData> data,
                                    const AssemblyOptions& options = {});

struct SlabState {
  Vector u, v, p;
  double t = 0.0;
};

enum class Field { U, V, P };

/// Temporal nodal coefficients of one slab.
struct SlabSolution {
  TimeScheme scheme = TimeScheme::dG;
  int k = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  /// Reference trial nodes: Gauss-Radau points for dG, Gauss-Lobatto points for cG.
  std::vector<double> nodes;
  std::vector<Vector> u, v, p;

  const std::vector<Vector>& coefficients(Field f) const;
  /// Temporal polynomial at t in [t_start, t_end]; at t_start this is the right limit.
  Vector evaluate(Field f, double t) const;
  /// Left limit at t_end, the incoming state of the next slab.
  SlabState end_state() const;
};

/// Block layout: unknown nodes of u, then v, then p.
struct SlabSystem {
  BlockSystem matrix;
  Vector rhs;
};

SlabSystem build_slab(const SpatialProblem& problem, const TemporalDiscretization& td,
                      const SlabState& state, double t_start, double t_end);
SlabSystem build_dg_slab(const SpatialProblem& problem, const SlabState& state, int k,
                         double t_start, double t_end);
SlabSystem build_cg_slab(const SpatialProblem& problem, const SlabState& state, int k,
                         double t_start, double t_end);

/// Assembles the full slab solution from the solved unknown block vector.
SlabSolution unpack_slab(const SpatialProblem& problem, const TemporalDiscretization& td,
                         const SlabState& state, double t_start, double t_end, const Vector& x);

enum class SolverKind {
  /// ILU(0)-preconditioned GMRES on the monolithic slab matrix, with a direct fallback.
  Gmres,
  /// Sparse LU of the monolithic slab matrix.
  Direct,
  /// Sparse LU after diagonalizing the temporal coupling: one complex system per node.
  Diagonalized
};

std::string to_string(SolverKind kind);
SolverKind solver_kind_from_string(const std::string& name);

struct SolverOptions {
  SolverKind kind = SolverKind::Diagonalized;
  GmresOptions gmres;
  bool direct_fallback = true;
};

struct SlabStats {
  int iterations = 0;
  double residual = 0.0;
  bool used_fallback = false;
  double seconds = 0.0;
};

/// Solves slab systems; factorizations are reused while the slab length is unchanged.
class SlabSolver {
public:
  SlabSolver(std::shared_ptr<const SpatialProblem> problem, TemporalDiscretization td,
             SolverOptions options = {});
  ~SlabSolver();
  SlabSolver(SlabSolver&&) noexcept;
  SlabSolver& operator=(SlabSolver&&) noexcept;

  const TemporalDiscretization& discretization() const { return td_; }
  const SpatialProblem& problem() const { return *problem_; }

  SlabSolution solve(const SlabState& state, double t_start, double t_end,
                     SlabStats* stats = nullptr);

private:
  struct Cache;
  std::shared_ptr<const SpatialProblem> problem_;
  TemporalDiscretization td_;
  SolverOptions options_;
  std::unique_ptr<Cache> cache_;
};

struct Trajectory {
  SchemeConfig config;
  SlabState initial;
  /// Empty unless slabs were kept.
  std::vector<SlabSolution> slabs;
  /// States at t_1..t_N (left limits).
  std::vector<SlabState> end_states;
};

/// Called after every slab with its 1-based index.
using SlabObserver =
    std::function<void(int slab, const SlabSolution& solution, const SlabStats& stats)>;

/// Sequential time marching over N uniform slabs. Failing slabs raise SlabFailure.
Trajectory advance(const SchemeConfig& config, std::shared_ptr<const SpatialProblem> problem,
                   const SlabState& initial, const SolverOptions& options = {},
                   const SlabObserver& observer = {}, bool keep_slabs = true);

/// Finite element function of the field at time t; t = 0 gives the initial data and
/// t in (t_{n-1}, t_n] the polynomial of slab n.
FEFunction evaluate_at_time(const Trajectory& trajectory, const SpatialProblem& problem,
                            double t, Field field);

/// Discrete energy (rho |v|^2 + <A u, u> + c0 |p|^2) / 2.
double discrete_energy(const SpatialProblem& problem, const Vector& u, const Vector& v,
                       const Vector& p);

/// Text checkpoint of one slab: header line followed by one line per coefficient vector.
void write_checkpoint(std::ostream& out, const SlabSolution& solution, int slab, int r);

} // namespace biot
