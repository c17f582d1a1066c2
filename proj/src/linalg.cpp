#include "biot/linalg.hpp"

#include "biot/errors.hpp"

#include <Eigen/SparseLU>
#ifdef BIOT_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

#include <cmath>
#include <memory>
#include <ostream>
#include <string>

namespace biot {

Vector matvec(const SparseMatrix& A, const Vector& x) {
  if (A.cols() != x.size()) {
    throw DimensionMismatch("matvec: matrix has " + std::to_string(A.cols()) +
                            " columns, vector has " + std::to_string(x.size()) + " entries");
  }
  return A * x;
}

void write_coordinate(std::ostream& out, const SparseMatrix& A) {
  const auto precision = out.precision(17);
  for (int i = 0; i < A.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(A, i); it; ++it) {
      out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    }
  }
  out.precision(precision);
}

BlockSystem::BlockSystem(std::vector<int> row_sizes, std::vector<int> col_sizes)
    : row_sizes_(std::move(row_sizes)), col_sizes_(std::move(col_sizes)) {
  row_offsets_.assign(1, 0);
  for (int s : row_sizes_) row_offsets_.push_back(row_offsets_.back() + s);
  col_offsets_.assign(1, 0);
  for (int s : col_sizes_) col_offsets_.push_back(col_offsets_.back() + s);
}

void BlockSystem::add(int i, int j, const SparseMatrix& block, double scale) {
  if (i < 0 || j < 0 || i >= block_rows() || j >= block_cols()) {
    throw DimensionMismatch("BlockSystem::add: block index out of range");
  }
  if (block.rows() != row_sizes_[i] || block.cols() != col_sizes_[j]) {
    throw DimensionMismatch("BlockSystem::add: block dimensions inconsistent with layout");
  }
  auto it = blocks_.find({i, j});
  if (it == blocks_.end()) {
    blocks_.emplace(std::pair{i, j}, SparseMatrix(scale * block));
  } else {
    it->second += scale * block;
  }
}

const SparseMatrix* BlockSystem::block(int i, int j) const {
  auto it = blocks_.find({i, j});
  return it == blocks_.end() ? nullptr : &it->second;
}

Vector BlockSystem::apply(const Vector& x) const {
  if (x.size() != cols()) throw DimensionMismatch("BlockSystem::apply: dimension mismatch");
  Vector y = Vector::Zero(rows());
  for (const auto& [ij, blk] : blocks_) {
    y.segment(row_offsets_[ij.first], row_sizes_[ij.first]) +=
        blk * x.segment(col_offsets_[ij.second], col_sizes_[ij.second]);
  }
  return y;
}

SparseMatrix BlockSystem::assemble() const {
  std::size_t nnz = 0;
  for (const auto& [ij, blk] : blocks_) nnz += static_cast<std::size_t>(blk.nonZeros());
  std::vector<Triplet> triplets;
  triplets.reserve(nnz);
  for (const auto& [ij, blk] : blocks_) {
    const int r0 = row_offsets_[ij.first];
    const int c0 = col_offsets_[ij.second];
    for (int i = 0; i < blk.outerSize(); ++i) {
      for (SparseMatrix::InnerIterator it(blk, i); it; ++it) {
        triplets.emplace_back(r0 + static_cast<int>(it.row()), c0 + static_cast<int>(it.col()),
                              it.value());
      }
    }
  }
  SparseMatrix A(rows(), cols());
  A.setFromTriplets(triplets.begin(), triplets.end());
  A.makeCompressed();
  return A;
}

JacobiPreconditioner::JacobiPreconditioner(const SparseMatrix& A) {
  inverse_diagonal_ = A.diagonal();
  for (Eigen::Index i = 0; i < inverse_diagonal_.size(); ++i) {
    if (inverse_diagonal_[i] == 0.0) throw ZeroPivot(static_cast<int>(i));
    inverse_diagonal_[i] = 1.0 / inverse_diagonal_[i];
  }
}

Vector JacobiPreconditioner::apply(const Vector& r) const {
  return inverse_diagonal_.cwiseProduct(r);
}

Ilu0::Ilu0(const SparseMatrix& A) : lu_(A) {
  if (A.rows() != A.cols()) throw DimensionMismatch("Ilu0: matrix must be square");
  lu_.makeCompressed();
  const int n = static_cast<int>(lu_.rows());
  const int* outer = lu_.outerIndexPtr();
  const int* inner = lu_.innerIndexPtr();
  double* val = lu_.valuePtr();
  diagonal_.assign(n, -1);
  std::vector<int> position(n, -1);

  for (int i = 0; i < n; ++i) {
    for (int p = outer[i]; p < outer[i + 1]; ++p) position[inner[p]] = p;
    for (int p = outer[i]; p < outer[i + 1] && inner[p] < i; ++p) {
      const int k = inner[p];
      const double pivot = val[diagonal_[k]];
      val[p] /= pivot;
      const double lik = val[p];
      for (int q = diagonal_[k] + 1; q < outer[k + 1]; ++q) {
        const int pos = position[inner[q]];
        if (pos >= 0) val[pos] -= lik * val[q];
      }
    }
    const int d = position[i];
    if (d < 0 || val[d] == 0.0 || !std::isfinite(val[d])) throw ZeroPivot(i);
    diagonal_[i] = d;
    for (int p = outer[i]; p < outer[i + 1]; ++p) position[inner[p]] = -1;
  }
}

Vector Ilu0::apply(const Vector& r) const {
  const int n = static_cast<int>(lu_.rows());
  const int* outer = lu_.outerIndexPtr();
  const int* inner = lu_.innerIndexPtr();
  const double* val = lu_.valuePtr();
  Vector x = r;
  for (int i = 0; i < n; ++i) {
    double s = x[i];
    for (int p = outer[i]; p < diagonal_[i]; ++p) s -= val[p] * x[inner[p]];
    x[i] = s;
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = x[i];
    for (int p = diagonal_[i] + 1; p < outer[i + 1]; ++p) s -= val[p] * x[inner[p]];
    x[i] = s / val[diagonal_[i]];
  }
  return x;
}

namespace {

template <typename Apply>
Vector gmres_impl(int n, const Apply& apply_A, const Vector& b, const Preconditioner& M,
                  const GmresOptions& opt, SolverStats* stats) {
  if (b.size() != n) throw DimensionMismatch("solve_gmres: right-hand side has wrong length");
  if (!(opt.rel_tol > 0.0 && opt.rel_tol < 1.0)) {
    throw InvalidArgument("solve_gmres: rel_tol must lie in (0,1)");
  }
  SolverStats local;
  SolverStats& st = stats ? *stats : local;
  st = SolverStats{};
  Vector x = Vector::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) return x;

  const int m = std::max(1, opt.restart);
  std::vector<Vector> V, Z;
  Eigen::MatrixXd H(m + 1, m);
  Vector cs(m), sn(m), g(m + 1);

  while (true) {
    const Vector r = b - apply_A(x);
    const double beta = r.norm();
    st.residual = beta / bnorm;
    if (st.residual <= opt.rel_tol) return x;
    if (st.iterations >= opt.max_iter) throw NoConvergence(st.iterations, st.residual);

    V.assign(1, r / beta);
    Z.clear();
    H.setZero();
    g.setZero();
    g[0] = beta;
    int j = 0;
    for (; j < m && st.iterations < opt.max_iter; ++j) {
      Z.push_back(M.apply(V[j]));
      Vector w = apply_A(Z[j]);
      for (int i = 0; i <= j; ++i) {
        H(i, j) = V[i].dot(w);
        w -= H(i, j) * V[i];
      }
      const double h = w.norm();
      H(j + 1, j) = h;
      for (int i = 0; i < j; ++i) {
        const double t = cs[i] * H(i, j) + sn[i] * H(i + 1, j);
        H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
        H(i, j) = t;
      }
      const double denom = std::hypot(H(j, j), H(j + 1, j));
      if (denom == 0.0) throw BreakdownDetected("GMRES: zero column in Hessenberg matrix");
      cs[j] = H(j, j) / denom;
      sn[j] = H(j + 1, j) / denom;
      H(j, j) = denom;
      H(j + 1, j) = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];
      ++st.iterations;
      st.history.push_back(std::abs(g[j + 1]) / bnorm);
      if (std::abs(g[j + 1]) / bnorm <= opt.rel_tol || h == 0.0) {
        ++j;
        break;
      }
      V.push_back(w / h);
    }
    // back substitution on the triangularized Hessenberg matrix
    Vector y = g.head(j);
    for (int i = j - 1; i >= 0; --i) {
      for (int k = i + 1; k < j; ++k) y[i] -= H(i, k) * y[k];
      if (H(i, i) == 0.0) throw BreakdownDetected("GMRES: singular least-squares system");
      y[i] /= H(i, i);
    }
    for (int i = 0; i < j; ++i) x += y[i] * Z[i];
    if (!x.allFinite()) throw BreakdownDetected("GMRES: non-finite iterate");
  }
}

} // namespace

Vector solve_gmres(const SparseMatrix& A, const Vector& b, const Preconditioner& M,
                   const GmresOptions& options, SolverStats* stats) {
  if (A.rows() != A.cols()) throw DimensionMismatch("solve_gmres: matrix must be square");
  return gmres_impl(
      static_cast<int>(A.rows()), [&A](const Vector& v) { return Vector(A * v); }, b, M, options,
      stats);
}

Vector solve_gmres(const BlockSystem& A, const Vector& b, const Preconditioner& M,
                   const GmresOptions& options, SolverStats* stats) {
  if (A.rows() != A.cols()) throw DimensionMismatch("solve_gmres: matrix must be square");
  return gmres_impl(
      A.rows(), [&A](const Vector& v) { return A.apply(v); }, b, M, options, stats);
}

namespace {

/// Normwise backward error |b - Ax| / (|A| |x| + |b|) in the infinity norm.
template <class Matrix, class Vec>
double backward_error(const Matrix& A, const Vec& x, const Vec& b, double norm_A) {
  const double denom = norm_A * x.template lpNorm<Eigen::Infinity>() +
                       b.template lpNorm<Eigen::Infinity>();
  if (denom == 0.0) return 0.0;
  return (b - A * x).template lpNorm<Eigen::Infinity>() / denom;
}

template <class Matrix>
double infinity_norm(const Matrix& A) {
  Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(A.rows());
  for (int j = 0; j < A.outerSize(); ++j) {
    for (typename Matrix::InnerIterator it(A, j); it; ++it) row_sums[it.row()] += std::abs(it.value());
  }
  return A.rows() > 0 ? row_sums.maxCoeff() : 0.0;
}

/// Sparse LU with residual checking. The primary factorization is UMFPACK when available;
/// a solution that fails the backward error check after refinement is recomputed with
/// Eigen's SparseLU.
template <class Scalar>
struct CheckedLu {
  using Matrix = Eigen::SparseMatrix<Scalar, Eigen::ColMajor, int>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Fallback = Eigen::SparseLU<Matrix, Eigen::COLAMDOrdering<int>>;

  static constexpr double kTolerance = 1e-10;
  static constexpr int kRefinements = 2;

  Matrix matrix; // the UMFPACK wrapper keeps a reference to the factored matrix
#ifdef BIOT_HAVE_UMFPACK
  Eigen::UmfPackLU<Matrix> lu;
#else
  Fallback lu;
#endif
  mutable std::unique_ptr<Fallback> fallback;
  double norm = 0.0;
  bool ready = false;
  int n = 0;

  void factorize(const Matrix& A, const char* what) {
    if (A.rows() != A.cols()) throw DimensionMismatch("solve_direct: matrix must be square");
    ready = false;
    fallback.reset();
    matrix = A;
    matrix.makeCompressed();
    n = static_cast<int>(A.rows());
    norm = infinity_norm(matrix);
    lu.compute(matrix);
    if (lu.info() != Eigen::Success) {
#ifdef BIOT_HAVE_UMFPACK
      compute_fallback(what);
#else
      throw SingularMatrix(std::string(what) + " factorization failed: matrix is singular");
#endif
    }
    ready = true;
  }

  void compute_fallback(const char* what) const {
    fallback = std::make_unique<Fallback>();
    fallback->compute(matrix);
    if (fallback->info() != Eigen::Success) {
      throw SingularMatrix(std::string(what) + " factorization failed: matrix is singular");
    }
  }

  template <class Solver>
  bool refine(const Solver& solver, const Vec& b, Vec& x) const {
    x = solver.solve(b);
    if (solver.info() != Eigen::Success || !x.allFinite()) return false;
    for (int step = 0;; ++step) {
      if (backward_error(matrix, x, b, norm) <= kTolerance) return true;
      if (step == kRefinements) return false;
      Vec dx = solver.solve(Vec(b - matrix * x));
      if (!dx.allFinite()) return false;
      x += dx;
    }
  }

  Vec solve(const Vec& b, const char* what) const {
    if (!ready) throw Error(std::string(what) + ": solve called before factorize");
    if (b.size() != n) throw DimensionMismatch("solve_direct: right-hand side length");
    Vec x;
    if (!fallback && refine(lu, b, x)) return x;
#ifdef BIOT_HAVE_UMFPACK
    if (!fallback) compute_fallback(what);
    if (refine(*fallback, b, x)) return x;
#endif
    if (!x.allFinite()) throw SingularMatrix(std::string(what) + " solve failed");
    return x;
  }
};

} // namespace

struct DirectSolver::Impl : CheckedLu<double> {};

DirectSolver::DirectSolver() : impl_(std::make_unique<Impl>()) {}

DirectSolver::DirectSolver(const SparseMatrix& A) : DirectSolver() { factorize(A); }

DirectSolver::~DirectSolver() = default;
DirectSolver::DirectSolver(DirectSolver&&) noexcept = default;
DirectSolver& DirectSolver::operator=(DirectSolver&&) noexcept = default;

void DirectSolver::factorize(const SparseMatrix& A) {
  impl_->factorize(Impl::Matrix(A), "sparse LU");
}

bool DirectSolver::factorized() const { return impl_->ready; }

Vector DirectSolver::solve(const Vector& b) const { return impl_->solve(b, "sparse LU"); }

Vector solve_direct(const SparseMatrix& A, const Vector& b) {
  DirectSolver solver(A);
  return solver.solve(b);
}

struct ComplexDirectSolver::Impl : CheckedLu<std::complex<double>> {};

ComplexDirectSolver::ComplexDirectSolver() : impl_(std::make_unique<Impl>()) {}

ComplexDirectSolver::ComplexDirectSolver(const ComplexSparseMatrix& A) : ComplexDirectSolver() {
  factorize(A);
}

ComplexDirectSolver::~ComplexDirectSolver() = default;
ComplexDirectSolver::ComplexDirectSolver(ComplexDirectSolver&&) noexcept = default;
ComplexDirectSolver& ComplexDirectSolver::operator=(ComplexDirectSolver&&) noexcept = default;

void ComplexDirectSolver::factorize(const ComplexSparseMatrix& A) {
  impl_->factorize(A, "complex sparse LU");
}

ComplexVector ComplexDirectSolver::solve(const ComplexVector& b) const {
  return impl_->solve(b, "complex sparse LU");
}

SparseMatrix constrain_rows_and_columns(const SparseMatrix& A, const std::vector<int>& indices) {
  std::vector<char> fixed(std::max(A.rows(), A.cols()), 0);
  for (int i : indices) fixed.at(i) = 1;
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(A.nonZeros()) + indices.size());
  for (int i = 0; i < A.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(A, i); it; ++it) {
      if (fixed[it.row()] || fixed[it.col()]) continue;
      triplets.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    }
  }
  for (int i : indices) triplets.emplace_back(i, i, 1.0);
  SparseMatrix C(A.rows(), A.cols());
  C.setFromTriplets(triplets.begin(), triplets.end());
  C.makeCompressed();
  return C;
}

} // namespace biot
