#pragma once

#include <stdexcept>
#include <string>

namespace biot {

/// Base class of all errors raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
  using Error::Error;
};

class DimensionMismatch : public Error {
public:
  using Error::Error;
};

class NoConvergence : public Error {
public:
  NoConvergence(int iterations, double residual)
      : Error("GMRES did not converge after " + std::to_string(iterations) +
              " iterations (relative residual " + std::to_string(residual) + ")"),
        iterations_(iterations), residual_(residual) {}
  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

private:
  int iterations_;
  double residual_;
};

class BreakdownDetected : public Error {
public:
  using Error::Error;
};

class ZeroPivot : public Error {
public:
  explicit ZeroPivot(int row)
      : Error("zero pivot in incomplete factorization at row " + std::to_string(row)), row_(row) {}
  int row() const { return row_; }

private:
  int row_;
};

class SingularMatrix : public Error {
public:
  using Error::Error;
};

/// A slab solve failed; carries the slab index for diagnostics.
class SlabFailure : public Error {
public:
  SlabFailure(int slab, const std::string& what)
      : Error("slab " + std::to_string(slab) + ": " + what), slab_(slab) {}
  int slab() const { return slab_; }

private:
  int slab_;
};

} // namespace biot
