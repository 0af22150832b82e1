#include "flowhawk/correlation.hpp"

#include "flowhawk/errors.hpp"
#include "flowhawk/lof.hpp"
#include "flowhawk/pca.hpp"

namespace flowhawk {

namespace {

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

}  // namespace

CorrelationResult correlation_analysis(const std::vector<std::string>& predictions,
                                       const Eigen::MatrixXd& mean_softmax,
                                       const std::vector<std::string>& class_labels,
                                       const Eigen::MatrixXd& vectors,
                                       const std::vector<int64_t>& record_indices,
                                       const CorrelationConfig& cfg) {
  const size_t n = predictions.size();
  if (vectors.rows() != static_cast<Eigen::Index>(n) ||
      mean_softmax.rows() != static_cast<Eigen::Index>(n) || record_indices.size() != n)
    throw ShapeError("correlation_analysis: inputs disagree on record count");
  if (mean_softmax.cols() != static_cast<Eigen::Index>(class_labels.size()))
    throw ShapeError("correlation_analysis: softmax width != class count");

  Eigen::Index normal_class = -1;
  for (size_t c = 0; c < class_labels.size(); ++c)
    if (class_labels[c] == cfg.normal_label) normal_class = static_cast<Eigen::Index>(c);

  CorrelationResult res;
  res.corrected = predictions;

  std::vector<Eigen::Index> normal_rows, abnormal_rows;
  for (size_t i = 0; i < n; ++i)
    (predictions[i] == cfg.normal_label ? normal_rows : abnormal_rows)
        .push_back(static_cast<Eigen::Index>(i));

  PcaModel<double> joint;
  if (cfg.joint_pca) joint = pca_fit(vectors, cfg.pca_components);

  auto analyze_cluster = [&](const std::vector<Eigen::Index>& rows, bool is_normal_cluster) {
    if (rows.size() < static_cast<size_t>(cfg.lof_k) + 1) {
      res.warnings.push_back(std::string(is_normal_cluster ? "Normal" : "Abnormal") +
                             " cluster has " + std::to_string(rows.size()) +
                             " records, fewer than lof_k+1; passed through unmodified");
      return;
    }
    const Eigen::MatrixXd cluster = gather_rows(vectors, rows);
    const Eigen::MatrixXd projected =
        cfg.joint_pca ? pca_transform(joint, cluster)
                      : pca_transform(pca_fit(cluster, cfg.pca_components), cluster);
    const LofResult<double> lof = lof_scores(projected, cfg.lof_k);
    for (size_t i = 0; i < rows.size(); ++i) {
      const double score = lof.scores(static_cast<Eigen::Index>(i));
      if (score <= cfg.lof_threshold) continue;
      const Eigen::Index rec = rows[i];
      FlipEntry flip;
      flip.record_index = record_indices[static_cast<size_t>(rec)];
      flip.old_label = res.corrected[static_cast<size_t>(rec)];
      flip.lof_score = score;
      if (is_normal_cluster) {
        // recovered miss: relabel to the strongest non-Normal class
        Eigen::Index best = -1;
        double best_p = -1.0;
        for (Eigen::Index c = 0; c < mean_softmax.cols(); ++c) {
          if (c == normal_class) continue;
          if (mean_softmax(rec, c) > best_p) {
            best_p = mean_softmax(rec, c);
            best = c;
          }
        }
        if (best < 0) continue;  // single-class softmax; nothing to relabel to
        flip.new_label = class_labels[static_cast<size_t>(best)];
      } else {
        flip.new_label = cfg.normal_label;
      }
      res.corrected[static_cast<size_t>(rec)] = flip.new_label;
      res.flips.push_back(std::move(flip));
    }
  };

  analyze_cluster(abnormal_rows, false);
  analyze_cluster(normal_rows, true);
  return res;
}

}  // namespace flowhawk
