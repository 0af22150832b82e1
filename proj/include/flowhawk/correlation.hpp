#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace flowhawk {

struct CorrelationConfig {
  int pca_components = 2;
  int lof_k = 25;
  double lof_threshold = 1.0;  // scores above this flag outliers
  bool joint_pca = false;      // fit PCA over both clusters instead of per cluster
  std::string normal_label = "Normal";
};

struct FlipEntry {
  int64_t record_index = -1;
  std::string old_label;
  std::string new_label;
  double lof_score = 0.0;
};

struct CorrelationResult {
  std::vector<std::string> corrected;  // same length and order as the input
  std::vector<FlipEntry> flips;
  std::vector<std::string> warnings;
};

/// Splits records into Normal / Abnormal clusters by predicted label, projects
/// each cluster to `pca_components` dimensions and flags LOF outliers:
/// Abnormal-cluster outliers flip to Normal, Normal-cluster outliers flip to
/// the strongest non-Normal class of the averaged member softmax. Clusters
/// smaller than lof_k+1 pass through unmodified with a warning.
CorrelationResult correlation_analysis(const std::vector<std::string>& predictions,
                                       const Eigen::MatrixXd& mean_softmax,
                                       const std::vector<std::string>& class_labels,
                                       const Eigen::MatrixXd& vectors,
                                       const std::vector<int64_t>& record_indices,
                                       const CorrelationConfig& cfg = {});

}  // namespace flowhawk
