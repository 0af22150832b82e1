#pragma once

#include <Eigen/Dense>

namespace flowhawk {

/// Input of the greedy majority vote for one record: the one-hot decision
/// table of the n member networks over m classes, plus their validation
/// accuracies and validation (macro) precisions.
struct VoteTriple {
  Eigen::MatrixXi decisions;   // n x m, each row one-hot
  Eigen::VectorXd accuracies;  // n, in [0,1]
  Eigen::VectorXd precisions;  // n, in [0,1]
};

/// Greedy majority vote: unique top vote count wins; vote ties fall back to
/// the highest validation accuracy among the networks that voted for a tied
/// class, then to the highest validation precision, then to the lowest
/// network index. Returns the winning class index.
int greedy_majority_vote(const VoteTriple& t);

}  // namespace flowhawk
