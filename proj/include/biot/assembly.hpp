#pragma once

#include "biot/linalg.hpp"
#include "biot/spaces.hpp"

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <memory>
#include <utility>

namespace biot {

struct MaterialParams {
  double rho = 1.0;
  double alpha = 0.9;
  double c0 = 0.01;
  Eigen::Matrix2d K = Eigen::Matrix2d::Identity();
  double lambda = 86.4;
  double mu = 37.0;
  double gamma_a = 0.0;
  double gamma_b = 0.0;

  /// Sets gamma_a = 5e4 r (r+1) and gamma_b = r (r-1) / 2.
  MaterialParams& with_default_penalties(int r);
  /// Throws InvalidArgument if any physical or penalty constraint is violated.
  void validate() const;
};

struct Lame {
  double lambda;
  double mu;
};

/// Isotropic (E, nu) -> (lambda, mu).
Lame lame_from_E_nu(double E, double nu);

/// Face length entering the penalties gamma / h.
enum class PenaltyLength {
  /// Face::h_normal, i.e. gamma (1/e+ + 1/e-) with e the cell extent normal to the face.
  Harmonic,
  /// Face::h_F, the averaged cell area.
  AveragedArea
};

struct AssemblyOptions {
  /// Gauss points per direction; 0 selects r + 1.
  int quadrature_points = 0;
  PenaltyLength penalty_length = PenaltyLength::Harmonic;
};

double penalty_length(const Face& face, const AssemblyOptions& options);

/// Sparse blocks of the spatial forms.
struct SystemMatrices {
  SparseMatrix mass_u; ///< plain L^2 mass on the vector space
  SparseMatrix mass_v; ///< rho-weighted vector mass
  SparseMatrix mass_p; ///< c0-weighted pressure mass
  SparseMatrix A;      ///< elasticity with Nitsche terms on Dirichlet faces
  SparseMatrix C;      ///< coupling, rows: vector dofs, columns: pressure dofs
  SparseMatrix B;      ///< interior penalty pressure diffusion
};

SparseMatrix assemble_mass(const FunctionSpace& space, double weight,
                           const AssemblyOptions& options = {});
SparseMatrix assemble_elasticity(const FunctionSpace& V, const MaterialParams& params,
                                 const AssemblyOptions& options = {});
SparseMatrix assemble_coupling(const FunctionSpace& V, const FunctionSpace& Q,
                               const MaterialParams& params, const AssemblyOptions& options = {});
SparseMatrix assemble_pressure_sipg(const FunctionSpace& Q, const MaterialParams& params,
                                    const AssemblyOptions& options = {});

SystemMatrices assemble_system(const FunctionSpace& V, const FunctionSpace& Q,
                               const MaterialParams& params, const AssemblyOptions& options = {});

using VectorData = std::function<std::array<double, 2>(Point x, double t)>;
using ScalarData = std::function<double(Point x, double t)>;

/// Data entering the right-hand side functionals. A null callback is only allowed when
/// no face of the corresponding boundary portion exists.
struct LoadData {
  VectorData body_force;      ///< f in <f, chi>
  ScalarData pressure_source; ///< g
  VectorData displacement_bc; ///< u_D on Dirichlet faces
  VectorData velocity_bc;     ///< v_D = d/dt u_D on Dirichlet faces
  VectorData traction;        ///< t_N on Neumann faces
  ScalarData pressure_bc;     ///< p_D
  ScalarData flux_bc;         ///< p_N

  static LoadData zero();
};

/// Load vectors (F, G) at a time instant. Reference tables are built once at construction.
class LoadAssembler {
public:
  LoadAssembler(std::shared_ptr<const FunctionSpace> V, std::shared_ptr<const FunctionSpace> Q,
                MaterialParams params, LoadData data, const AssemblyOptions& options = {});

  std::pair<Vector, Vector> operator()(double t) const;

private:
  std::shared_ptr<const FunctionSpace> V_;
  std::shared_ptr<const FunctionSpace> Q_;
  MaterialParams params_;
  LoadData data_;
  AssemblyOptions options_;
  int nq_;
};

std::pair<Vector, Vector> assemble_loads(const FunctionSpace& V, const FunctionSpace& Q,
                                         const MaterialParams& params, const LoadData& data,
                                         double t, const AssemblyOptions& options = {});

} // namespace biot
