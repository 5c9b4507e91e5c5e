#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace hyperntf {

/// Precondition violated by the caller (bad mode, shape mismatch, k out of range, ...).
struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Input data violates a content requirement, e.g. a negative entry handed to a
/// nonnegative solver. `index` is the linear index of the first offender.
struct DataError : std::runtime_error {
  DataError(const std::string& what, std::int64_t idx = -1)
      : std::runtime_error(what), index(idx) {}
  std::int64_t index;
};

/// A factor column collapsed to zero during a multiplicative solve.
struct DegenerateRank : std::runtime_error {
  DegenerateRank(const std::string& what, Eigen::Index col, Eigen::Index iter = -1)
      : std::runtime_error(what), column(col), iteration(iter) {}
  Eigen::Index column;
  Eigen::Index iteration;
};

/// Numerical breakdown (singular local Gram, failed eigensolve, ...).
struct NumericFailure : std::runtime_error {
  NumericFailure(const std::string& what, Eigen::Index idx = -1)
      : std::runtime_error(what), index(idx) {}
  Eigen::Index index;
};

/// Not enough nonzero Laplacian eigenvalues to form the requested embedding.
struct DegenerateSpectrum : NumericFailure {
  DegenerateSpectrum(const std::string& what, Eigen::Index components)
      : NumericFailure(what, components), component_count(components) {}
  Eigen::Index component_count;
};

/// Malformed file. `offset` is the byte (or line, for text formats) where parsing failed.
struct FormatError : std::runtime_error {
  FormatError(const std::string& what, std::uint64_t off)
      : std::runtime_error(what), offset(off) {}
  std::uint64_t offset;
};

/// File ended before the declared payload was read.
struct TruncationError : FormatError {
  using FormatError::FormatError;
};

/// Experiment configuration is missing a field, has an unknown key or an out-of-range value.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace hyperntf
