#pragma once

#include <map>
#include <string>
#include <vector>

#include "paraling/dsp.hpp"

namespace paraling {

/// One training/evaluation unit: a feature matrix plus class labels per task
/// and/or a frame-rate regression target.
struct LabeledExample {
  std::string id;
  FeatureMatrix features;
  std::map<std::string, int> labels;
  std::vector<double> target;
};

}  // namespace paraling
