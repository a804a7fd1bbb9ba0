// Copyright 2026 The taskinf Authors
// SPDX-License-Identifier: Apache-2.0

#include "taskinf/task.hpp"

#include <sstream>

namespace taskinf {

std::string to_string(Provenance p) { return p == Provenance::Regular ? "regular" : "noise"; }

Provenance provenance_from_string(const std::string& name) {
  if (name == "regular") return Provenance::Regular;
  if (name == "noise") return Provenance::Noise;
  throw UsageError("unknown provenance '" + name + "'");
}

void Task::validate() const {
  std::ostringstream where;
  where << "task " << id << ": ";
  if (n_ways < 2) throw UsageError(where.str() + "n_ways must be at least 2");
  if (support.inputs.cols() != query.inputs.cols() && support.size() > 0 && query.size() > 0)
    throw UsageError(where.str() + "support and query input dims differ");
  for (const Batch* b : {&support, &query}) {
    if (static_cast<Index>(b->labels.size()) != b->size())
      throw UsageError(where.str() + "label count does not match sample count");
    for (int y : b->labels)
      if (y < 0 || y >= n_ways) throw UsageError(where.str() + "label outside [0, n_ways)");
  }
}

}  // namespace taskinf
