#pragma once

#include <cstddef>
#include <optional>

namespace glrc {

/// Per-epoch training log entry. Loss components are means over the
/// epoch's steps, already multiplied by their lambda (a disabled term logs
/// 0), so they sum to `total`.
struct EpochRecord {
  std::size_t epoch = 0;
  double total = 0.0;
  double rec = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
  double l4 = 0.0;
  std::optional<double> recall20;
  std::optional<double> ndcg20;
  double seconds = 0.0;
};

}  // namespace glrc
