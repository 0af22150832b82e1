#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flowhawk/record_io.hpp"

namespace flowhawk {

/// Train-time-frozen encodings and scaling bounds: per-nominal value->code
/// tables (codes dense from 0 in lexicographic value order, one reserved code
/// for unseen values), per-feature training means for imputation, and min/max
/// bounds for [0,1] scaling.
struct PreprocessorState {
  std::vector<std::string> feature_names;
  std::vector<bool> nominal;
  std::vector<std::map<std::string, int>> tables;  // empty for numeric features
  Eigen::VectorXd means;
  Eigen::VectorXd mins;
  Eigen::VectorXd maxs;
  std::string schema_hash;

  int unseen_code(size_t feature) const {
    return static_cast<int>(tables[feature].size());
  }
};

struct NormalizedData {
  Eigen::MatrixXd values;  // n x features, each in [0,1]
  std::vector<int64_t> record_indices;
  std::vector<std::string> attack_cats;       // empty string = absent
  std::vector<std::optional<int>> labels;
  std::string schema_hash;
};

PreprocessorState fit_preprocessor(const RecordTable& table);

NormalizedData transform_records(const RecordTable& table, const PreprocessorState& state);

void save_preprocessor(const PreprocessorState& state, const std::string& path);
PreprocessorState load_preprocessor(const std::string& path);

/// Hash of the ordered feature-name list; stamped into models and vectors so
/// incompatible pairings fail loudly.
std::string feature_schema_hash(const std::vector<std::string>& names);

/// Class label for training: attack_cat when present, otherwise "Normal" for
/// label 0. Records with neither are unlabeled.
std::optional<std::string> training_label(const std::string& attack_cat,
                                          const std::optional<int>& label);

}  // namespace flowhawk
