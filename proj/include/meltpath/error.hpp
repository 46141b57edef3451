#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace meltpath {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Normalisation by a zero-width reference range.
class UndefinedNormalization : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated file. `offset` is the byte position where decoding failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

/// Non-finite value produced by a numerical kernel. `index` is the first offending
/// element (a linear voxel index for field solvers).
class NumericFailure : public Error {
 public:
  NumericFailure(const std::string& what, std::size_t index)
      : Error(what + " (index " + std::to_string(index) + ")"), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Scan path rejected at a given action step (0-based).
class InvalidPath : public Error {
 public:
  InvalidPath(const std::string& what, std::size_t step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Reward-table build where some movements failed.
class PartialTableError : public Error {
 public:
  PartialTableError(const std::string& what, std::vector<std::size_t> failed)
      : Error(what), failed_(std::move(failed)) {}
  const std::vector<std::size_t>& failed() const noexcept { return failed_; }

 private:
  std::vector<std::size_t> failed_;
};

}  // namespace meltpath
