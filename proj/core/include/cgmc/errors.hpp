#pragma once

#include <stdexcept>
#include <string>

namespace cgmc {

/// Base class for all cgmc errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid configuration or geometry (bad N/q factorization, odd cell count, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Value outside its mathematical domain (inadmissible block value, bad parity, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An exact-enumeration request exceeds the configured desk-scale caps.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// A correlation-table bin required for evaluation was never populated.
class CoverageError : public Error {
 public:
  using Error::Error;
};

/// The three-body closed form was evaluated outside its validity region
/// (non-positive logarithm argument).
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// Desk-scale limits for exact enumeration. All caps can be lifted with
/// accept_large when the caller explicitly accepts the cost.
struct CapacityPolicy {
  int max_cell_sites = 24;        // single-cell slice enumeration
  int max_triple_cell_sites = 12; // joint three-cell enumeration
  int max_total_sites = 20;       // full 2^N state enumeration
  bool accept_large = false;

  void require_cell(int q) const;
  void require_triple(int q) const;
  void require_total(int n) const;
};

}  // namespace cgmc
