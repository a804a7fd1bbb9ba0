// Copyright 2026 The taskinf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "taskinf/model.hpp"

namespace taskinf {

/// Where a task came from; used to split scores in mixed tasksets.
enum class Provenance { Regular, Noise };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& name);

/// A few-shot episode: the support set drives adaptation, the query set
/// measures the adapted model. Labels are in [0, n_ways).
struct Task {
  std::uint64_t id = 0;
  std::optional<std::uint64_t> group_id;
  Provenance provenance = Provenance::Regular;
  int n_ways = 0;
  Batch support;
  Batch query;

  Index input_dim() const { return support.inputs.cols(); }
  /// Throws UsageError when support/query disagree on dims or labels.
  void validate() const;
  /// The group this task belongs to; ungrouped tasks form their own group.
  std::uint64_t group() const { return group_id.value_or(id); }
};

}  // namespace taskinf
