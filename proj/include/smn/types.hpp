#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace smn {

// All numeric work is done in 64-bit floating point.
using Scalar = double;
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
using SparseMatrix = Eigen::SparseMatrix<Scalar, Eigen::RowMajor, std::int64_t>;

using NodeId = std::int64_t;
using CommunityId = int;
using NodeList = std::vector<NodeId>;

// Error hierarchy. The CLI maps each family onto an exit code.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input text (carries the offending line number in the message).
struct ParseError : Error {
  using Error::Error;
};
struct DimensionError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct ArgumentError : Error {
  using Error::Error;
};
// Binary container problems: magic, version, truncation.
struct FormatError : Error {
  using Error::Error;
};
struct DatasetError : Error {
  using Error::Error;
};
// A non-finite value appeared during training.
struct NumericError : Error {
  using Error::Error;
};
// A caller broke an operation's precondition.
struct ContractError : Error {
  using Error::Error;
};
struct SearchError : Error {
  using Error::Error;
};

/// Derives an independent 64-bit seed for a named purpose from a root seed,
/// so one `--seed` flag fans out to the split, the initializer, the query
/// sampler and so on without their streams overlapping.
std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose);

/// 64-bit FNV-1a, used for content-keyed cache names.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace smn
