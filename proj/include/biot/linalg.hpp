#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <complex>
#include <iosfwd>
#include <map>
#include <memory>
#include <utility>
#include <vector>

namespace biot {

/// Compressed row storage with sorted column indices.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
using Vector = Eigen::VectorXd;
using Triplet = Eigen::Triplet<double, int>;

/// y = A x with a dimension check.
Vector matvec(const SparseMatrix& A, const Vector& x);

/// Coordinate text dump: one `row col value` line per stored entry.
void write_coordinate(std::ostream& out, const SparseMatrix& A);

/// Grid of sparse blocks with consistent block sizes. Missing blocks are zero.
class BlockSystem {
public:
  BlockSystem(std::vector<int> row_sizes, std::vector<int> col_sizes);

  int block_rows() const { return static_cast<int>(row_sizes_.size()); }
  int block_cols() const { return static_cast<int>(col_sizes_.size()); }
  int rows() const { return row_offsets_.back(); }
  int cols() const { return col_offsets_.back(); }
  int row_offset(int i) const { return row_offsets_[i]; }
  int col_offset(int j) const { return col_offsets_[j]; }

  /// Adds `scale * block` to block (i, j).
  void add(int i, int j, const SparseMatrix& block, double scale = 1.0);
  /// Null if the block was never set.
  const SparseMatrix* block(int i, int j) const;

  Vector apply(const Vector& x) const;
  SparseMatrix assemble() const;

private:
  std::vector<int> row_sizes_, col_sizes_;
  std::vector<int> row_offsets_, col_offsets_;
  std::map<std::pair<int, int>, SparseMatrix> blocks_;
};

/// Action of an approximate inverse.
class Preconditioner {
public:
  virtual ~Preconditioner() = default;
  virtual Vector apply(const Vector& r) const = 0;
};

class IdentityPreconditioner final : public Preconditioner {
public:
  Vector apply(const Vector& r) const override { return r; }
};

class JacobiPreconditioner final : public Preconditioner {
public:
  explicit JacobiPreconditioner(const SparseMatrix& A);
  Vector apply(const Vector& r) const override;

private:
  Vector inverse_diagonal_;
};

/// Incomplete LU factorization without fill on the sparsity pattern of A.
class Ilu0 final : public Preconditioner {
public:
  explicit Ilu0(const SparseMatrix& A);
  Vector apply(const Vector& r) const override;

private:
  SparseMatrix lu_;
  std::vector<int> diagonal_;
};

struct GmresOptions {
  double rel_tol = 1e-10;
  int max_iter = 1000;
  int restart = 100;
};

struct SolverStats {
  int iterations = 0;
  double residual = 0.0; ///< final relative residual ||b - Ax|| / ||b||
  /// relative residual estimates, one per inner iteration
  std::vector<double> history;
  bool direct = false;
};

/// Right-preconditioned restarted GMRES; the residual tested is the true one.
Vector solve_gmres(const SparseMatrix& A, const Vector& b, const Preconditioner& M,
                   const GmresOptions& options, SolverStats* stats = nullptr);
Vector solve_gmres(const BlockSystem& A, const Vector& b, const Preconditioner& M,
                   const GmresOptions& options, SolverStats* stats = nullptr);

/// Sparse LU with pivoting, factorized once and reusable for many right-hand sides.
class DirectSolver {
public:
  DirectSolver();
  explicit DirectSolver(const SparseMatrix& A);
  ~DirectSolver();
  DirectSolver(DirectSolver&&) noexcept;
  DirectSolver& operator=(DirectSolver&&) noexcept;

  void factorize(const SparseMatrix& A);
  Vector solve(const Vector& b) const;
  bool factorized() const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

using ComplexSparseMatrix = Eigen::SparseMatrix<std::complex<double>, Eigen::ColMajor, int>;
using ComplexVector = Eigen::VectorXcd;

/// Complex counterpart of DirectSolver.
class ComplexDirectSolver {
public:
  ComplexDirectSolver();
  explicit ComplexDirectSolver(const ComplexSparseMatrix& A);
  ~ComplexDirectSolver();
  ComplexDirectSolver(ComplexDirectSolver&&) noexcept;
  ComplexDirectSolver& operator=(ComplexDirectSolver&&) noexcept;

  void factorize(const ComplexSparseMatrix& A);
  ComplexVector solve(const ComplexVector& b) const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

Vector solve_direct(const SparseMatrix& A, const Vector& b);

/// Zeroes the rows and columns of the listed indices and puts 1 on their diagonal.
SparseMatrix constrain_rows_and_columns(const SparseMatrix& A, const std::vector<int>& indices);

} // namespace biot
