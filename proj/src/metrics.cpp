#include "soe/metrics.hpp"

#include <cmath>

#include "soe/error.hpp"

namespace soe {

ClassificationMetrics classification_metrics(const std::vector<int>& preds,
                                             const std::vector<int>& targets) {
  if (preds.empty() || preds.size() != targets.size())
    throw MetricError("classification_metrics: empty or mismatched inputs");
  long tp = 0, tn = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i], t = targets[i];
    if (p != 0 && p != 1) throw MetricError("classification_metrics: non-binary prediction");
    if (t != 0 && t != 1) throw MetricError("classification_metrics: non-binary target");
    if (t == 1)
      (p == 1 ? tp : fn)++;
    else
      (p == 0 ? tn : fp)++;
  }
  if (tp + fn == 0 || tn + fp == 0)
    throw MetricError("classification_metrics: a class is absent from the targets");
  ClassificationMetrics m;
  const double recall_pos = static_cast<double>(tp) / (tp + fn);
  const double recall_neg = static_cast<double>(tn) / (tn + fp);
  m.bacc = 0.5 * (recall_pos + recall_neg);
  const double precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
  m.f1 = precision + recall_pos > 0 ? 2.0 * precision * recall_pos / (precision + recall_pos)
                                    : 0.0;
  return m;
}

RegressionMetrics regression_metrics(const std::vector<double>& preds,
                                     const std::vector<double>& targets) {
  if (preds.empty() || preds.size() != targets.size())
    throw MetricError("regression_metrics: empty or mismatched inputs");
  double mean_t = 0.0;
  for (double t : targets) mean_t += t;
  mean_t /= static_cast<double>(targets.size());

  double ss_res = 0.0, ss_tot = 0.0, abs_err = 0.0;
  for (size_t i = 0; i < preds.size(); ++i) {
    const double e = preds[i] - targets[i];
    ss_res += e * e;
    ss_tot += (targets[i] - mean_t) * (targets[i] - mean_t);
    abs_err += std::abs(e);
  }
  if (ss_tot == 0.0)
    throw MetricError("regression_metrics: constant targets leave R2 undefined");
  RegressionMetrics m;
  m.r2 = 1.0 - ss_res / ss_tot;
  m.mae = abs_err / static_cast<double>(preds.size());
  return m;
}

} // namespace soe
