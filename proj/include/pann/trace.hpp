#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pann/linalg.hpp"

namespace pann {

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;      // f_t(theta_t), evaluated before the update
  Vector theta;           // theta_t
  Vector grad;
  double grad_norm2 = 0.0;
  double grad_norm_inf = 0.0;
};

// Per-epoch log of one optimizer run.
struct TrainingTrace {
  std::string label;
  std::uint64_t seed = 0;
  std::vector<std::string> names;
  Vector lower;
  Vector upper;
  Vector alpha;
  std::vector<EpochRecord> epochs;
  Vector final_theta;  // iterate after the last update
  bool failed = false;
  std::string failure;

  bool empty() const { return epochs.empty(); }
  std::size_t size() const { return epochs.size(); }
};

}  // namespace pann
