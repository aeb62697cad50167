#pragma once

#include <vector>

namespace soe {

struct ClassificationMetrics {
  double bacc = 0.0; // mean of per-class recalls
  double f1 = 0.0;   // harmonic mean of precision/recall for class 1
};

struct RegressionMetrics {
  double r2 = 0.0;
  double mae = 0.0;
};

// Binary labels in {0,1}. Throws MetricError on empty input or when a class
// is absent from the targets (per-class recall undefined). F1 is 0 when
// nothing is predicted positive.
ClassificationMetrics classification_metrics(const std::vector<int>& preds,
                                             const std::vector<int>& targets);

// Throws MetricError on empty input or constant targets (SS_tot = 0 leaves
// R2 undefined).
RegressionMetrics regression_metrics(const std::vector<double>& preds,
                                     const std::vector<double>& targets);

} // namespace soe
