#include "flowhawk/vote.hpp"

#include <vector>

#include "flowhawk/errors.hpp"

namespace flowhawk {

int greedy_majority_vote(const VoteTriple& t) {
  const Eigen::Index n = t.decisions.rows();
  const Eigen::Index m = t.decisions.cols();
  if (n < 1 || m < 1) throw DataError("vote: empty decision table");
  if (t.accuracies.size() != n || t.precisions.size() != n)
    throw DataError("vote: accuracy/precision length != network count");
  std::vector<int> voted(static_cast<size_t>(n), -1);
  for (Eigen::Index i = 0; i < n; ++i) {
    int sum = 0;
    for (Eigen::Index j = 0; j < m; ++j) {
      const int d = t.decisions(i, j);
      if (d != 0 && d != 1) throw DataError("vote: decision table entries must be 0/1");
      if (d == 1) voted[static_cast<size_t>(i)] = static_cast<int>(j);
      sum += d;
    }
    if (sum != 1) throw DataError("vote: row " + std::to_string(i) + " is not one-hot");
  }

  const Eigen::VectorXi votes = t.decisions.colwise().sum();
  const int top = votes.maxCoeff();
  Eigen::Index unique_class = -1;
  int tied = 0;
  for (Eigen::Index j = 0; j < m; ++j)
    if (votes(j) == top) {
      ++tied;
      unique_class = j;
    }
  if (tied == 1) return static_cast<int>(unique_class);

  // Networks that contributed to a tied class, filtered down by VACC then VP.
  std::vector<Eigen::Index> contenders;
  for (Eigen::Index i = 0; i < n; ++i)
    if (votes(voted[static_cast<size_t>(i)]) == top) contenders.push_back(i);

  double best_acc = -1.0;
  for (Eigen::Index i : contenders) best_acc = std::max(best_acc, t.accuracies(i));
  std::vector<Eigen::Index> by_acc;
  for (Eigen::Index i : contenders)
    if (t.accuracies(i) == best_acc) by_acc.push_back(i);
  if (by_acc.size() == 1) return voted[static_cast<size_t>(by_acc.front())];

  double best_prec = -1.0;
  for (Eigen::Index i : by_acc) best_prec = std::max(best_prec, t.precisions(i));
  for (Eigen::Index i : by_acc)  // first in index order on a precision tie
    if (t.precisions(i) == best_prec) return voted[static_cast<size_t>(i)];
  return voted[static_cast<size_t>(by_acc.front())];  // unreachable
}

}  // namespace flowhawk
