#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "flowhawk/nn/model_io.hpp"
#include "flowhawk/nn/train.hpp"
#include "flowhawk/vote.hpp"

namespace flowhawk {

template <typename Scalar>
struct EnsembleModel {
  std::vector<std::unique_ptr<nn::Network<Scalar>>> members;
  std::vector<double> vacc;
  std::vector<double> vp;
  std::vector<std::string> class_labels;
  std::string schema_hash;
  uint64_t seed = 0;
};

struct EnsemblePrediction {
  std::vector<int> voted;                    // per-record winning class index
  std::vector<Eigen::MatrixXd> member_probs; // per member, (n x classes)
  Eigen::MatrixXd mean_probs;                // (n x classes)
};

/// Runs every member, votes row-wise with the greedy majority strategy and
/// keeps the per-member softmax rows for the incident analyzer.
template <typename Scalar>
EnsemblePrediction ensemble_predict(EnsembleModel<Scalar>& ensemble,
                                    const nn::Mat<Scalar>& features,
                                    const std::string& schema_hash) {
  if (ensemble.members.empty()) throw ConfigError("ensemble has no members");
  if (!schema_hash.empty() && schema_hash != ensemble.schema_hash)
    throw DataError("ensemble/vector schema hash mismatch: vectors " + schema_hash +
                    " vs ensemble " + ensemble.schema_hash);

  const size_t n_members = ensemble.members.size();
  const Eigen::Index n = features.rows();
  const Eigen::Index classes =
      static_cast<Eigen::Index>(ensemble.members.front()->spec().classes);

  EnsemblePrediction pred;
  pred.member_probs.reserve(n_members);
  for (auto& net : ensemble.members) {
    if (net->spec().classes != classes) throw ShapeError("ensemble members disagree on classes");
    pred.member_probs.push_back(
        nn::predict_probs(*net, features).template cast<double>());
  }
  pred.mean_probs = Eigen::MatrixXd::Zero(n, classes);
  for (const auto& probs : pred.member_probs) pred.mean_probs += probs;
  pred.mean_probs /= static_cast<double>(n_members);

  VoteTriple triple;
  triple.accuracies = Eigen::Map<const Eigen::VectorXd>(ensemble.vacc.data(),
                                                        static_cast<Eigen::Index>(n_members));
  triple.precisions = Eigen::Map<const Eigen::VectorXd>(ensemble.vp.data(),
                                                        static_cast<Eigen::Index>(n_members));
  pred.voted.reserve(static_cast<size_t>(n));
  for (Eigen::Index r = 0; r < n; ++r) {
    triple.decisions = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(n_members), classes);
    for (size_t m = 0; m < n_members; ++m) {
      Eigen::Index best;
      pred.member_probs[m].row(r).maxCoeff(&best);
      triple.decisions(static_cast<Eigen::Index>(m), best) = 1;
    }
    pred.voted.push_back(greedy_majority_vote(triple));
  }
  return pred;
}

/// Manifest JSON plus one model file per member next to it
/// ("<stem>.member<k>.fhm").
template <typename Scalar>
void save_ensemble(const std::string& manifest_path, EnsembleModel<Scalar>& ensemble) {
  nlohmann::json j;
  j["format"] = "flowhawk-ensemble";
  j["version"] = 1;
  j["class_labels"] = ensemble.class_labels;
  j["schema_hash"] = ensemble.schema_hash;
  j["seed"] = ensemble.seed;
  nlohmann::json members = nlohmann::json::array();
  const std::string stem = manifest_path.size() > 5 &&
                                   manifest_path.substr(manifest_path.size() - 5) == ".json"
                               ? manifest_path.substr(0, manifest_path.size() - 5)
                               : manifest_path;
  for (size_t m = 0; m < ensemble.members.size(); ++m) {
    const std::string file = stem + ".member" + std::to_string(m) + ".fhm";
    nn::ModelMeta meta;
    meta.vacc = ensemble.vacc[m];
    meta.vp = ensemble.vp[m];
    meta.class_labels = ensemble.class_labels;
    meta.schema_hash = ensemble.schema_hash;
    meta.seed = ensemble.seed;
    nn::save_model(file, *ensemble.members[m], meta);
    nlohmann::json jm;
    jm["variant"] = std::string(1, ensemble.members[m]->spec().variant);
    jm["depth"] = ensemble.members[m]->spec().blocks.size();
    jm["file"] = std::filesystem::path(file).filename().string();
    jm["vacc"] = ensemble.vacc[m];
    jm["vp"] = ensemble.vp[m];
    members.push_back(std::move(jm));
  }
  j["members"] = std::move(members);
  std::ofstream out(manifest_path, std::ios::trunc);
  if (!out) throw DataError("cannot write ensemble manifest: " + manifest_path);
  out << j.dump(2) << "\n";
}

template <typename Scalar>
EnsembleModel<Scalar> load_ensemble(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot open ensemble manifest: " + manifest_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("ensemble manifest is not valid JSON: " + std::string(e.what()));
  }
  if (j.value("format", "") != "flowhawk-ensemble" || j.value("version", 0) != 1)
    throw FormatError("unrecognized ensemble manifest: " + manifest_path);

  EnsembleModel<Scalar> ens;
  ens.class_labels = j.at("class_labels").get<std::vector<std::string>>();
  ens.schema_hash = j.at("schema_hash").get<std::string>();
  ens.seed = j.at("seed").get<uint64_t>();
  const auto dir = std::filesystem::path(manifest_path).parent_path();
  for (const auto& jm : j.at("members")) {
    const std::string file = (dir / jm.at("file").get<std::string>()).string();
    auto loaded = nn::load_model<Scalar>(file);
    ens.vacc.push_back(loaded.meta.vacc);
    ens.vp.push_back(loaded.meta.vp);
    ens.members.push_back(std::move(loaded.net));
  }
  if (ens.members.empty()) throw FormatError("ensemble manifest lists no members");
  return ens;
}

}  // namespace flowhawk
