#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace flowhawk {

struct ConfusionCounts {
  long tp = 0;
  long tn = 0;
  long fp = 0;
  long fn = 0;

  long total() const { return tp + tn + fp + fn; }
};

/// ACC, DR (recall), FAR, precision and F1 as fractions in [0,1];
/// a metric whose denominator is zero is absent, never silently 0.
struct MetricSet {
  std::optional<double> accuracy;
  std::optional<double> detection_rate;
  std::optional<double> false_alarm_rate;
  std::optional<double> precision;
  std::optional<double> f1;
};

struct ClassReportRow {
  std::string label;
  ConfusionCounts counts;
  MetricSet metrics;
};

/// Binary confusion over string labels: a record is positive when its label
/// belongs to `positive`.
ConfusionCounts confusion(const std::vector<std::string>& predicted,
                          const std::vector<std::string>& truth,
                          const std::set<std::string>& positive);

MetricSet metrics_of(const ConfusionCounts& c);

/// Fraction of records whose predicted label equals the true label.
double multiclass_accuracy(const std::vector<std::string>& predicted,
                           const std::vector<std::string>& truth);

/// One-vs-rest row per class, in the given class order.
std::vector<ClassReportRow> per_class_report(const std::vector<std::string>& predicted,
                                             const std::vector<std::string>& truth,
                                             const std::vector<std::string>& classes);

/// "88.66" (two decimals, 0-100 scale) or "n/a".
std::string render_percent(const std::optional<double>& fraction);

}  // namespace flowhawk
