#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mtdc {

template <typename Real>
using ComplexMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Real>
using ComplexVector = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;

using Complex = std::complex<double>;
using CMatrix = ComplexMatrix<double>;
using CVector = ComplexVector<double>;
using Index = Eigen::Index;

/// Impedances with magnitude below this are treated as short circuits.
inline constexpr double kZeroImpedance = 1e-12;

// -----------------------------------------------------------------------------
// Error hierarchy. Every failure raised by the library derives from Error so a
// caller can tag it with a pipeline stage and keep the original message.
// -----------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error { using Error::Error; };
class GridError : public Error { using Error::Error; };
class DimensionError : public Error { using Error::Error; };
class ExtrapolationError : public Error { using Error::Error; };
class EmptyOverlapError : public Error { using Error::Error; };
class ZeroImpedanceError : public Error { using Error::Error; };
class UnresolvedEndpointError : public Error { using Error::Error; };
class SingularMatrixError : public Error { using Error::Error; };
class DecompositionError : public Error { using Error::Error; };
class LocusThroughPointError : public Error { using Error::Error; };
class ConsistencyError : public Error { using Error::Error; };
class ZeroEigenvalueError : public Error { using Error::Error; };
class EmptyRangeError : public Error { using Error::Error; };
class PoleOnGridError : public Error { using Error::Error; };
class SingularPencilError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };

/// Raised when an eigenvector basis is too ill-conditioned (or defective) to
/// support first-order sensitivities.
class IllConditionedError : public Error {
 public:
  IllConditionedError(const std::string& what, double condition)
      : Error(what), condition_(condition) {}
  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

/// Wraps an Error with the pipeline stage it escaped from.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace mtdc
