#include "flowhawk/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "flowhawk/errors.hpp"

namespace flowhawk {

ConfusionCounts confusion(const std::vector<std::string>& predicted,
                          const std::vector<std::string>& truth,
                          const std::set<std::string>& positive) {
  if (predicted.size() != truth.size())
    throw DataError("confusion: prediction and truth lengths differ");
  ConfusionCounts c;
  for (size_t i = 0; i < predicted.size(); ++i) {
    const bool pred_pos = positive.count(predicted[i]) > 0;
    const bool true_pos = positive.count(truth[i]) > 0;
    if (pred_pos && true_pos)
      ++c.tp;
    else if (!pred_pos && !true_pos)
      ++c.tn;
    else if (pred_pos)
      ++c.fp;
    else
      ++c.fn;
  }
  return c;
}

MetricSet metrics_of(const ConfusionCounts& c) {
  MetricSet m;
  auto ratio = [](long num, long denom) -> std::optional<double> {
    if (denom == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(denom);
  };
  m.accuracy = ratio(c.tp + c.tn, c.total());
  m.detection_rate = ratio(c.tp, c.tp + c.fn);
  m.false_alarm_rate = ratio(c.fp, c.fp + c.tn);
  m.precision = ratio(c.tp, c.tp + c.fp);
  if (m.precision && m.detection_rate && (*m.precision + *m.detection_rate) > 0.0)
    m.f1 = 2.0 * *m.precision * *m.detection_rate / (*m.precision + *m.detection_rate);
  return m;
}

double multiclass_accuracy(const std::vector<std::string>& predicted,
                           const std::vector<std::string>& truth) {
  if (predicted.size() != truth.size())
    throw DataError("multiclass_accuracy: prediction and truth lengths differ");
  if (predicted.empty()) return 0.0;
  size_t ok = 0;
  for (size_t i = 0; i < predicted.size(); ++i) ok += predicted[i] == truth[i];
  return static_cast<double>(ok) / static_cast<double>(predicted.size());
}

std::vector<ClassReportRow> per_class_report(const std::vector<std::string>& predicted,
                                             const std::vector<std::string>& truth,
                                             const std::vector<std::string>& classes) {
  std::vector<ClassReportRow> rows;
  rows.reserve(classes.size());
  for (const auto& cls : classes) {
    ClassReportRow row;
    row.label = cls;
    row.counts = confusion(predicted, truth, {cls});
    row.metrics = metrics_of(row.counts);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string render_percent(const std::optional<double>& fraction) {
  if (!fraction) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", *fraction * 100.0);
  return buf;
}

}  // namespace flowhawk
