// flowhawk: pcap -> flow records -> normalized vectors -> ensemble detection
// -> incident analysis, as a set of file-to-file pipeline stages.
#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "flowhawk/backtrack.hpp"
#include "flowhawk/capture.hpp"
#include "flowhawk/correlation.hpp"
#include "flowhawk/ensemble.hpp"
#include "flowhawk/errors.hpp"
#include "flowhawk/flow_assembler.hpp"
#include "flowhawk/incident.hpp"
#include "flowhawk/manifest.hpp"
#include "flowhawk/metrics.hpp"
#include "flowhawk/preprocess.hpp"
#include "flowhawk/priority.hpp"
#include "flowhawk/record_io.hpp"
#include "flowhawk/window_features.hpp"

namespace fh = flowhawk;
using nlohmann::json;

namespace {

struct PipelineConfig {
  uint64_t seed = 1;
  bool paper_scale = false;

  // stream processor
  double idle_timeout_s = 60.0;
  int window_size = 100;

  // subnet hyperparameters (filters 0 = number of features)
  int filters = 0;
  int kernel = 3;
  int pool = 2;
  double dropout = 0.2;
  int depth_a = 2, depth_b = 2, dense_blocks_c = 1, inner_plain_c = 2;
  int paper_depth_a = 10, paper_depth_b = 10, paper_dense_blocks_c = 2, paper_inner_plain_c = 5;

  // training
  int epochs = 10;
  int batch_size = 256;
  double learning_rate = 0.001;
  double rho = 0.9;
  double eps = 1e-7;
  double val_fraction = 0.1;
  double early_stop_vacc = 2.0;  // > 1 disables early stopping

  // incident analyzer
  int pca_components = 2;
  int lof_k = 25;
  double threshold = 1.0;
  bool joint_pca = false;
  std::string normal_label = "Normal";
  std::map<std::string, int> severity = fh::default_severity_map();

  std::string config_hash;  // filled after flag/file resolution
};

// config file: `key = value` lines, '#' comments; severity.<Category> keys
// override the severity map.
void apply_config_file(PipelineConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw fh::ConfigError("cannot open config file: " + path);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw fh::ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
      continue;
    }
    auto trim = [](std::string s) {
      const size_t b = s.find_first_not_of(" \t\r");
      const size_t e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "paper_scale") cfg.paper_scale = value == "true" || value == "1";
      else if (key == "idle_timeout") cfg.idle_timeout_s = std::stod(value);
      else if (key == "window_size") cfg.window_size = std::stoi(value);
      else if (key == "filters") cfg.filters = std::stoi(value);
      else if (key == "kernel") cfg.kernel = std::stoi(value);
      else if (key == "pool") cfg.pool = std::stoi(value);
      else if (key == "dropout") cfg.dropout = std::stod(value);
      else if (key == "depth_a") cfg.depth_a = std::stoi(value);
      else if (key == "depth_b") cfg.depth_b = std::stoi(value);
      else if (key == "dense_blocks_c") cfg.dense_blocks_c = std::stoi(value);
      else if (key == "inner_plain_c") cfg.inner_plain_c = std::stoi(value);
      else if (key == "epochs") cfg.epochs = std::stoi(value);
      else if (key == "batch_size") cfg.batch_size = std::stoi(value);
      else if (key == "learning_rate") cfg.learning_rate = std::stod(value);
      else if (key == "rho") cfg.rho = std::stod(value);
      else if (key == "eps") cfg.eps = std::stod(value);
      else if (key == "val_fraction") cfg.val_fraction = std::stod(value);
      else if (key == "early_stop_vacc") cfg.early_stop_vacc = std::stod(value);
      else if (key == "pca_components") cfg.pca_components = std::stoi(value);
      else if (key == "lof_k") cfg.lof_k = std::stoi(value);
      else if (key == "threshold") cfg.threshold = std::stod(value);
      else if (key == "joint_pca") cfg.joint_pca = value == "true" || value == "1";
      else if (key == "normal_label") cfg.normal_label = value;
      else if (key.rfind("severity.", 0) == 0)
        cfg.severity[key.substr(9)] = std::stoi(value);
      else
        throw fh::ConfigError(path + ":" + std::to_string(line_no) + ": unknown key '" + key +
                              "'");
    } catch (const std::invalid_argument&) {
      throw fh::ConfigError(path + ":" + std::to_string(line_no) + ": bad value for '" + key +
                            "'");
    }
  }
}

std::string hash_config(const PipelineConfig& c) {
  std::string text;
  auto kv = [&](const std::string& k, const std::string& v) { text += k + "=" + v + "\n"; };
  kv("seed", std::to_string(c.seed));
  kv("paper_scale", c.paper_scale ? "1" : "0");
  kv("idle_timeout", std::to_string(c.idle_timeout_s));
  kv("window_size", std::to_string(c.window_size));
  kv("filters", std::to_string(c.filters));
  kv("kernel", std::to_string(c.kernel));
  kv("pool", std::to_string(c.pool));
  kv("dropout", std::to_string(c.dropout));
  kv("depth_a", std::to_string(c.depth_a));
  kv("depth_b", std::to_string(c.depth_b));
  kv("dense_blocks_c", std::to_string(c.dense_blocks_c));
  kv("inner_plain_c", std::to_string(c.inner_plain_c));
  kv("epochs", std::to_string(c.epochs));
  kv("batch_size", std::to_string(c.batch_size));
  kv("learning_rate", std::to_string(c.learning_rate));
  kv("rho", std::to_string(c.rho));
  kv("eps", std::to_string(c.eps));
  kv("val_fraction", std::to_string(c.val_fraction));
  kv("early_stop_vacc", std::to_string(c.early_stop_vacc));
  kv("pca_components", std::to_string(c.pca_components));
  kv("lof_k", std::to_string(c.lof_k));
  kv("threshold", std::to_string(c.threshold));
  kv("joint_pca", c.joint_pca ? "1" : "0");
  kv("normal_label", c.normal_label);
  for (const auto& [cat, level] : c.severity) kv("severity." + cat, std::to_string(level));
  return fh::fnv1a64_hex(text);
}

void require_artifact(const std::string& path, const std::string& producer) {
  if (!std::filesystem::exists(path))
    throw fh::DataError("missing artifact '" + path + "'; produce it with " + producer);
}

// ---------------------------------------------------------------------------

int cmd_extract(const PipelineConfig& cfg, const std::string& pcap, const std::string& out_csv,
                const std::string& out_registry) {
  require_artifact(pcap, "a packet capture");
  fh::CaptureResult cap = fh::ingest_capture(pcap);
  fh::FlowConfig fc;
  fc.idle_timeout_us = static_cast<int64_t>(cfg.idle_timeout_s * 1e6);
  fh::AssemblyResult res = fh::assemble_flows(cap.packets, fc, pcap);
  fh::WindowConfig wc;
  wc.window_size = cfg.window_size;
  fh::compute_window_features(res.records, wc);
  const int64_t written = fh::export_records(res.records, out_csv);
  fh::write_registry(res.registry, out_registry);
  fh::write_output_manifest(out_csv, cfg.config_hash, cfg.seed, {{pcap, fh::hash_file(pcap)}});
  fh::write_output_manifest(out_registry, cfg.config_hash, cfg.seed,
                            {{pcap, fh::hash_file(pcap)}});
  std::cout << "extract: " << cap.packets.size() << " packets (" << cap.non_ip_skipped
            << " non-IP skipped, " << cap.malformed_skipped << " malformed) -> " << written
            << " records\n";
  return 0;
}

int cmd_fit(const PipelineConfig& cfg, const std::string& train_csv,
            const std::string& out_state) {
  require_artifact(train_csv, "'flowhawk extract'");
  fh::RecordTable table = fh::read_table(train_csv);
  fh::PreprocessorState st = fh::fit_preprocessor(table);
  fh::save_preprocessor(st, out_state);
  fh::write_output_manifest(out_state, cfg.config_hash, cfg.seed,
                            {{train_csv, fh::hash_file(train_csv)}});
  std::cout << "fit: " << table.rows.size() << " records, schema " << st.schema_hash << "\n";
  return 0;
}

int cmd_transform(const PipelineConfig& cfg, const std::string& csv,
                  const std::string& state_path, const std::string& out_csv) {
  require_artifact(csv, "'flowhawk extract'");
  require_artifact(state_path, "'flowhawk fit'");
  fh::PreprocessorState st = fh::load_preprocessor(state_path);
  fh::NormalizedData nd = fh::transform_records(fh::read_table(csv), st);

  std::ofstream out(out_csv, std::ios::trunc);
  if (!out) throw fh::DataError("cannot write vectors file: " + out_csv);
  out << "record_index";
  for (const auto& name : st.feature_names) out << ',' << name;
  out << ",attack_cat,label\n";
  char buf[32];
  for (Eigen::Index r = 0; r < nd.values.rows(); ++r) {
    out << nd.record_indices[static_cast<size_t>(r)];
    for (Eigen::Index f = 0; f < nd.values.cols(); ++f) {
      std::snprintf(buf, sizeof(buf), "%.6f", nd.values(r, f));
      out << ',' << buf;
    }
    out << ',' << nd.attack_cats[static_cast<size_t>(r)] << ',';
    if (nd.labels[static_cast<size_t>(r)]) out << *nd.labels[static_cast<size_t>(r)];
    out << "\n";
  }
  fh::write_output_manifest(out_csv, cfg.config_hash, cfg.seed,
                            {{csv, fh::hash_file(csv)}, {state_path, fh::hash_file(state_path)}});
  std::cout << "transform: " << nd.values.rows() << " vectors of width " << nd.values.cols()
            << "\n";
  return 0;
}

struct LabeledVectors {
  fh::nn::Dataset data;
  std::vector<std::string> class_labels;
  std::vector<int64_t> record_indices;
  std::string schema_hash;
};

LabeledVectors load_labeled(const std::string& csv, const fh::PreprocessorState& st) {
  fh::NormalizedData nd = fh::transform_records(fh::read_table(csv), st);
  LabeledVectors lv;
  std::set<std::string> names;
  std::vector<std::string> raw(nd.record_indices.size());
  for (size_t r = 0; r < nd.record_indices.size(); ++r) {
    auto label = fh::training_label(nd.attack_cats[r], nd.labels[r]);
    if (!label)
      throw fh::DataError("record " + std::to_string(nd.record_indices[r]) +
                          " has no usable label (attack_cat or label required)");
    raw[r] = *label;
    names.insert(*label);
  }
  lv.class_labels.assign(names.begin(), names.end());
  std::map<std::string, int> code;
  for (size_t c = 0; c < lv.class_labels.size(); ++c)
    code[lv.class_labels[c]] = static_cast<int>(c);
  lv.data.features = nd.values;
  for (const auto& s : raw) lv.data.labels.push_back(code.at(s));
  lv.record_indices = nd.record_indices;
  lv.schema_hash = nd.schema_hash;
  return lv;
}

int cmd_train(const PipelineConfig& cfg, const std::string& train_csv,
              const std::string& state_path, const std::string& out_ensemble) {
  require_artifact(train_csv, "'flowhawk extract'");
  require_artifact(state_path, "'flowhawk fit'");
  fh::PreprocessorState st = fh::load_preprocessor(state_path);
  LabeledVectors lv = load_labeled(train_csv, st);
  const int classes = static_cast<int>(lv.class_labels.size());
  const int features = static_cast<int>(lv.data.features.cols());
  if (classes < 2) throw fh::DataError("training needs at least two classes");

  fh::nn::SubnetHyper hyper;
  hyper.filters = cfg.filters;
  hyper.kernel = cfg.kernel;
  hyper.pool = cfg.pool;
  hyper.dropout_rate = cfg.dropout;
  const int depth_a = cfg.paper_scale ? cfg.paper_depth_a : cfg.depth_a;
  const int depth_b = cfg.paper_scale ? cfg.paper_depth_b : cfg.depth_b;
  const int blocks_c = cfg.paper_scale ? cfg.paper_dense_blocks_c : cfg.dense_blocks_c;
  const int inner_c = cfg.paper_scale ? cfg.paper_inner_plain_c : cfg.inner_plain_c;

  fh::nn::TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.batch_size = cfg.batch_size;
  tc.learning_rate = cfg.learning_rate;
  tc.rho = cfg.rho;
  tc.eps = cfg.eps;
  tc.val_fraction = cfg.val_fraction;
  tc.early_stop_vacc = cfg.early_stop_vacc;

  fh::EnsembleModel<double> ens;
  ens.class_labels = lv.class_labels;
  ens.schema_hash = lv.schema_hash;
  ens.seed = cfg.seed;
  const struct {
    char variant;
    int depth, inner;
  } members[3] = {{'A', depth_a, 0}, {'B', depth_b, 0}, {'C', blocks_c, inner_c}};
  for (const auto& m : members) {
    auto spec = fh::nn::make_subnet_spec(m.variant, m.depth, m.inner, classes, features, hyper);
    auto net = std::make_unique<fh::nn::Network<double>>(
        spec, fh::nn::mix_seed(cfg.seed, static_cast<uint64_t>(m.variant)));
    tc.seed = fh::nn::mix_seed(cfg.seed, 0x1000 + static_cast<uint64_t>(m.variant));
    fh::nn::TrainReport rep = fh::nn::train(*net, lv.data, tc);
    std::cout << "train: subnet " << m.variant << " epochs " << rep.epochs_run << " vacc "
              << rep.vacc << " vp " << rep.vp << "\n";
    ens.vacc.push_back(rep.vacc);
    ens.vp.push_back(rep.vp);
    ens.members.push_back(std::move(net));
  }
  fh::save_ensemble(out_ensemble, ens);
  fh::write_output_manifest(
      out_ensemble, cfg.config_hash, cfg.seed,
      {{train_csv, fh::hash_file(train_csv)}, {state_path, fh::hash_file(state_path)}});
  return 0;
}

int cmd_detect(const PipelineConfig& cfg, const std::string& csv,
               const std::string& ensemble_path, const std::string& state_path,
               const std::string& out_pred) {
  require_artifact(csv, "'flowhawk extract'");
  require_artifact(ensemble_path, "'flowhawk train'");
  require_artifact(state_path, "'flowhawk fit'");
  fh::PreprocessorState st = fh::load_preprocessor(state_path);
  fh::NormalizedData nd = fh::transform_records(fh::read_table(csv), st);
  auto ens = fh::load_ensemble<double>(ensemble_path);
  fh::EnsemblePrediction pred = fh::ensemble_predict(ens, nd.values, nd.schema_hash);

  std::ofstream out(out_pred, std::ios::trunc);
  if (!out) throw fh::DataError("cannot write predictions: " + out_pred);
  json meta;
  meta["classes"] = ens.class_labels;
  meta["schema_hash"] = ens.schema_hash;
  json jm = json::array();
  for (size_t m = 0; m < ens.members.size(); ++m) {
    json one;
    one["variant"] = std::string(1, ens.members[m]->spec().variant);
    one["vacc"] = ens.vacc[m];
    one["vp"] = ens.vp[m];
    jm.push_back(std::move(one));
  }
  meta["members"] = std::move(jm);
  out << meta.dump() << "\n";
  for (Eigen::Index r = 0; r < nd.values.rows(); ++r) {
    json j;
    j["record_index"] = nd.record_indices[static_cast<size_t>(r)];
    j["pred"] = ens.class_labels[static_cast<size_t>(pred.voted[static_cast<size_t>(r)])];
    json probs = json::array();
    for (const auto& member : pred.member_probs) {
      json row = json::array();
      for (Eigen::Index c = 0; c < member.cols(); ++c) row.push_back(member(r, c));
      probs.push_back(std::move(row));
    }
    j["probs"] = std::move(probs);
    out << j.dump() << "\n";
  }
  fh::write_output_manifest(out_pred, cfg.config_hash, cfg.seed,
                            {{csv, fh::hash_file(csv)},
                             {ensemble_path, fh::hash_file(ensemble_path)},
                             {state_path, fh::hash_file(state_path)}});
  std::cout << "detect: " << nd.values.rows() << " records scored by " << ens.members.size()
            << " subnets\n";
  return 0;
}

struct PredictionsFile {
  std::vector<std::string> classes;
  std::string schema_hash;
  std::vector<int64_t> record_indices;
  std::vector<std::string> predicted;
  Eigen::MatrixXd mean_probs;
};

PredictionsFile read_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw fh::DataError("cannot open predictions: " + path);
  std::string line;
  if (!std::getline(in, line)) throw fh::FormatError("empty predictions file: " + path);
  json meta;
  try {
    meta = json::parse(line);
  } catch (const json::exception& e) {
    throw fh::FormatError("predictions meta line: " + std::string(e.what()));
  }
  if (!meta.contains("classes")) throw fh::FormatError("not a predictions file: " + path);
  PredictionsFile pf;
  pf.classes = meta.at("classes").get<std::vector<std::string>>();
  pf.schema_hash = meta.value("schema_hash", "");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    pf.record_indices.push_back(j.at("record_index").get<int64_t>());
    pf.predicted.push_back(j.at("pred").get<std::string>());
    std::vector<double> mean(pf.classes.size(), 0.0);
    const auto& probs = j.at("probs");
    for (const auto& member : probs)
      for (size_t c = 0; c < pf.classes.size(); ++c) mean[c] += member[c].get<double>();
    for (auto& v : mean) v /= static_cast<double>(probs.size());
    rows.push_back(std::move(mean));
  }
  pf.mean_probs.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(pf.classes.size()));
  for (size_t r = 0; r < rows.size(); ++r)
    for (size_t c = 0; c < pf.classes.size(); ++c)
      pf.mean_probs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return pf;
}

int cmd_analyze(const PipelineConfig& cfg, const std::string& pred_path, const std::string& csv,
                const std::string& registry_path, const std::string& state_path,
                const std::string& out_incidents) {
  require_artifact(pred_path, "'flowhawk detect'");
  require_artifact(csv, "'flowhawk extract'");
  require_artifact(registry_path, "'flowhawk extract'");
  require_artifact(state_path, "'flowhawk fit'");

  PredictionsFile pf = read_predictions(pred_path);
  fh::PreprocessorState st = fh::load_preprocessor(state_path);
  fh::NormalizedData nd = fh::transform_records(fh::read_table(csv), st);
  if (nd.record_indices != pf.record_indices)
    throw fh::DataError("predictions and records disagree on record_index order");

  fh::CorrelationConfig cc;
  cc.pca_components = cfg.pca_components;
  cc.lof_k = cfg.lof_k;
  cc.lof_threshold = cfg.threshold;
  cc.joint_pca = cfg.joint_pca;
  cc.normal_label = cfg.normal_label;
  fh::CorrelationResult corr = fh::correlation_analysis(pf.predicted, pf.mean_probs, pf.classes,
                                                        nd.values, pf.record_indices, cc);
  for (const auto& w : corr.warnings) std::cerr << "analyze: warning: " << w << "\n";

  const std::vector<fh::RegistryEntry> registry = fh::read_registry(registry_path);

  std::vector<fh::Incident> incidents;
  std::vector<std::string> categories;
  for (size_t r = 0; r < corr.corrected.size(); ++r) {
    if (corr.corrected[r] == cfg.normal_label) continue;
    fh::Incident inc;
    inc.record_index = pf.record_indices[r];
    inc.category = corr.corrected[r];
    inc.severity = fh::severity_of(inc.category, cfg.severity);
    inc.threat_score = inc.severity;
    fh::BacktrackResult bt = fh::backtrack(inc.record_index, registry);
    inc.rule = bt.rule;
    inc.packet_ordinals = bt.ordinals;
    inc.payload_ref = bt.capture + "#" + std::to_string(inc.record_index);
    categories.push_back(inc.category);
    incidents.push_back(std::move(inc));
  }
  const std::vector<size_t> order = fh::assess_priority(categories, cfg.severity);
  std::vector<fh::Incident> ordered;
  ordered.reserve(incidents.size());
  for (size_t i : order) ordered.push_back(std::move(incidents[i]));
  fh::write_incidents(ordered, out_incidents);

  json flips = json::array();
  for (const auto& f : corr.flips) {
    json j;
    j["record_index"] = f.record_index;
    j["old"] = f.old_label;
    j["new"] = f.new_label;
    j["lof_score"] = f.lof_score;
    flips.push_back(std::move(j));
  }
  std::ofstream flog(out_incidents + ".flips.json", std::ios::trunc);
  flog << flips.dump(2) << "\n";

  fh::write_output_manifest(out_incidents, cfg.config_hash, cfg.seed,
                            {{pred_path, fh::hash_file(pred_path)},
                             {csv, fh::hash_file(csv)},
                             {registry_path, fh::hash_file(registry_path)},
                             {state_path, fh::hash_file(state_path)}});
  std::cout << "analyze: " << ordered.size() << " incidents, " << corr.flips.size()
            << " prediction flips\n";
  return 0;
}

int cmd_evaluate(const PipelineConfig& cfg, const std::string& results_path,
                 const std::string& truth_csv, const std::string& out_report) {
  require_artifact(results_path, "'flowhawk detect' or 'flowhawk analyze'");
  require_artifact(truth_csv, "'flowhawk extract'");

  // truth labels by record_index
  fh::RecordTable table = fh::read_table(truth_csv);
  const int64_t idx_col = table.find_column("record_index");
  const int64_t cat_col = table.find_column("attack_cat");
  const int64_t lab_col = table.find_column("label");
  if (idx_col < 0 || cat_col < 0 || lab_col < 0)
    throw fh::FormatError("truth csv must carry record_index, attack_cat and label columns");
  std::vector<int64_t> indices;
  std::vector<std::string> truth;
  for (const auto& row : table.rows) {
    const std::string& cat = row[static_cast<size_t>(cat_col)];
    const std::string& lab = row[static_cast<size_t>(lab_col)];
    std::optional<int> label;
    if (!lab.empty()) label = std::stoi(lab);
    auto t = fh::training_label(cat, label);
    if (!t)
      throw fh::DataError("truth record " + row[static_cast<size_t>(idx_col)] +
                          " has no usable label");
    indices.push_back(std::stoll(row[static_cast<size_t>(idx_col)]));
    truth.push_back(*t);
  }

  // predictions from either artifact kind: a detect output (meta line with
  // "classes") or an analyze incident list
  std::map<int64_t, std::string> by_index;
  std::ifstream sniff(results_path);
  std::string first_line;
  std::getline(sniff, first_line);
  bool is_predictions = false;
  try {
    json j = json::parse(first_line.empty() ? "{}" : first_line);
    is_predictions = j.contains("classes");
  } catch (const json::exception&) {
    throw fh::FormatError("unrecognized results file: " + results_path);
  }
  if (is_predictions) {
    PredictionsFile pf = read_predictions(results_path);
    for (size_t r = 0; r < pf.record_indices.size(); ++r)
      by_index[pf.record_indices[r]] = pf.predicted[r];
  } else {
    for (const auto& inc : fh::read_incidents(results_path))
      by_index[inc.record_index] = inc.category;
  }

  std::vector<std::string> predicted;
  predicted.reserve(indices.size());
  for (int64_t idx : indices) {
    const auto it = by_index.find(idx);
    // absent from an incident list means the analyzer considers it normal
    predicted.push_back(it != by_index.end() ? it->second : cfg.normal_label);
  }

  std::set<std::string> classes_set(truth.begin(), truth.end());
  for (const auto& p : predicted) classes_set.insert(p);
  std::set<std::string> positive = classes_set;
  positive.erase(cfg.normal_label);

  const fh::ConfusionCounts binary = fh::confusion(predicted, truth, positive);
  const fh::MetricSet binary_metrics = fh::metrics_of(binary);
  const double multi_acc = fh::multiclass_accuracy(predicted, truth);
  const std::vector<std::string> class_list(classes_set.begin(), classes_set.end());
  const auto per_class = fh::per_class_report(predicted, truth, class_list);

  auto metric_json = [](const fh::MetricSet& m) {
    json j;
    j["accuracy"] = fh::render_percent(m.accuracy);
    j["detection_rate"] = fh::render_percent(m.detection_rate);
    j["false_alarm_rate"] = fh::render_percent(m.false_alarm_rate);
    j["precision"] = fh::render_percent(m.precision);
    j["f1"] = fh::render_percent(m.f1);
    return j;
  };
  json report;
  report["binary"] = metric_json(binary_metrics);
  report["binary"]["confusion"] = {
      {"tp", binary.tp}, {"tn", binary.tn}, {"fp", binary.fp}, {"fn", binary.fn}};
  char acc_buf[32];
  std::snprintf(acc_buf, sizeof(acc_buf), "%.2f", multi_acc * 100.0);
  report["multiclass"] = {{"accuracy", acc_buf}};
  json per = json::array();
  for (const auto& row : per_class) {
    json j = metric_json(row.metrics);
    j["class"] = row.label;
    per.push_back(std::move(j));
  }
  report["per_class"] = std::move(per);

  std::ofstream jout(out_report, std::ios::trunc);
  if (!jout) throw fh::DataError("cannot write report: " + out_report);
  jout << report.dump(2) << "\n";

  std::string csv_path = out_report;
  if (csv_path.size() > 5 && csv_path.substr(csv_path.size() - 5) == ".json")
    csv_path = csv_path.substr(0, csv_path.size() - 5);
  csv_path += ".csv";
  std::ofstream csv_out(csv_path, std::ios::trunc);
  csv_out << "scope,accuracy,detection_rate,false_alarm_rate,precision,f1\n";
  auto csv_row = [&](const std::string& scope, const fh::MetricSet& m) {
    csv_out << scope << ',' << fh::render_percent(m.accuracy) << ','
            << fh::render_percent(m.detection_rate) << ','
            << fh::render_percent(m.false_alarm_rate) << ',' << fh::render_percent(m.precision)
            << ',' << fh::render_percent(m.f1) << "\n";
  };
  csv_row("binary", binary_metrics);
  csv_out << "multiclass," << acc_buf << ",n/a,n/a,n/a,n/a\n";
  for (const auto& row : per_class) csv_row("class:" + row.label, row.metrics);

  fh::write_output_manifest(out_report, cfg.config_hash, cfg.seed,
                            {{results_path, fh::hash_file(results_path)},
                             {truth_csv, fh::hash_file(truth_csv)}});
  std::cout << "evaluate: binary ACC " << fh::render_percent(binary_metrics.accuracy)
            << "% multiclass ACC " << acc_buf << "%\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flow-record extraction, ensemble detection and incident triage"};
  app.require_subcommand(1);

  PipelineConfig cfg;
  std::string config_file;
  app.add_option("--config", config_file, "key = value configuration file");
  auto* seed_opt = app.add_option("--seed", cfg.seed, "master seed recorded into every output");
  auto* paper_opt =
      app.add_flag("--paper-scale", cfg.paper_scale, "use the full-depth subnet configuration");
  auto* lofk_opt = app.add_option("--lof-k", cfg.lof_k, "LOF neighbor count");
  auto* pca_opt =
      app.add_option("--pca-components", cfg.pca_components, "PCA components for the analyzer");
  auto* thr_opt = app.add_option("--threshold", cfg.threshold, "LOF outlier threshold");

  std::string a1, a2, a3, a4, a5;

  auto* extract = app.add_subcommand("extract", "pcap -> records csv + packet registry");
  extract->add_option("pcap", a1)->required();
  extract->add_option("out_csv", a2)->required();
  extract->add_option("out_registry", a3)->required();

  auto* fit = app.add_subcommand("fit", "fit the preprocessor on training records");
  fit->add_option("train_csv", a1)->required();
  fit->add_option("out_state", a2)->required();

  auto* transform = app.add_subcommand("transform", "records -> normalized vectors csv");
  transform->add_option("csv", a1)->required();
  transform->add_option("state", a2)->required();
  transform->add_option("out_csv", a3)->required();

  auto* train = app.add_subcommand("train", "train the three subnets and store VACC/VP");
  train->add_option("train_csv", a1)->required();
  train->add_option("state", a2)->required();
  train->add_option("out_ensemble", a3)->required();

  auto* detect = app.add_subcommand("detect", "score records with the trained ensemble");
  detect->add_option("csv", a1)->required();
  detect->add_option("ensemble", a2)->required();
  detect->add_option("out_predictions", a3)->required();
  detect->add_option("--state", a4, "preprocessor state path")->required();

  auto* analyze =
      app.add_subcommand("analyze", "correlation analysis, backtracking and prioritization");
  analyze->add_option("predictions", a1)->required();
  analyze->add_option("csv", a2)->required();
  analyze->add_option("registry", a3)->required();
  analyze->add_option("out_incidents", a4)->required();
  analyze->add_option("--state", a5, "preprocessor state path")->required();

  auto* evaluate =
      app.add_subcommand("evaluate", "score predictions or incidents against truth");
  evaluate->add_option("results", a1)->required();
  evaluate->add_option("truth_csv", a2)->required();
  evaluate->add_option("out_report", a3)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_file.empty()) {
      // flags win over the config file
      const PipelineConfig from_flags = cfg;
      apply_config_file(cfg, config_file);
      if (seed_opt->count()) cfg.seed = from_flags.seed;
      if (paper_opt->count()) cfg.paper_scale = from_flags.paper_scale;
      if (lofk_opt->count()) cfg.lof_k = from_flags.lof_k;
      if (pca_opt->count()) cfg.pca_components = from_flags.pca_components;
      if (thr_opt->count()) cfg.threshold = from_flags.threshold;
    }
    cfg.config_hash = hash_config(cfg);

    if (extract->parsed()) return cmd_extract(cfg, a1, a2, a3);
    if (fit->parsed()) return cmd_fit(cfg, a1, a2);
    if (transform->parsed()) return cmd_transform(cfg, a1, a2, a3);
    if (train->parsed()) return cmd_train(cfg, a1, a2, a3);
    if (detect->parsed()) return cmd_detect(cfg, a1, a2, a4, a3);
    if (analyze->parsed()) return cmd_analyze(cfg, a1, a2, a3, a5, a4);
    if (evaluate->parsed()) return cmd_evaluate(cfg, a1, a2, a3);
  } catch (const fh::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const fh::ShapeError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const fh::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const fh::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
