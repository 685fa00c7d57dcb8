#pragma once

#include <string>
#include <vector>

#include "cfa/types.hpp"

namespace cfa {

/// A spatial feature vector (pixels or Gabor magnitudes) with its class.
struct LabeledSample {
  RealVector vector;
  ClassId label = 0;
  std::string source_id;
};

using SampleSet = std::vector<LabeledSample>;

/// Number of classes, i.e. 1 + the largest label. Throws on negative labels.
int class_count(const SampleSet& samples);

/// Throws ValidationError unless every vector is finite, all share one length
/// and labels lie in [0, L).
void validate_samples(const SampleSet& samples);

}  // namespace cfa
