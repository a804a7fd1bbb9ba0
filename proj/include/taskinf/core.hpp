// Copyright 2026 The taskinf Authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared aliases, error types and the deterministic worker pool.

#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace taskinf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments, inconsistent dimensions, malformed configuration.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Divergence, non-convergence, ill-conditioned inversion.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Unreadable or unwritable files, bad magic, truncated payloads.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Caps the number of worker threads used by parallel_for. 0 restores the
/// default (hardware concurrency).
void set_max_threads(std::size_t n);
std::size_t max_threads();

/// Runs body(i) for i in [0, n). Each index is handled by exactly one worker,
/// so callers that write only to slot i get results independent of the
/// thread count. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace taskinf
