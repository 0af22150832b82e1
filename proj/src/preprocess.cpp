#include "flowhawk/preprocess.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "flowhawk/errors.hpp"
#include "flowhawk/manifest.hpp"

namespace flowhawk {

namespace {

constexpr int kStateVersion = 1;

double parse_cell(const std::string& s, const std::string& column) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError("preprocess: bad number in column '" + column + "': '" + s + "'");
  }
}

// Columns: every feature must be present; anything else must be one of the
// known non-feature columns.
std::vector<int64_t> map_feature_columns(const RecordTable& table) {
  static const std::set<std::string> extra = {"record_index", "attack_cat", "label"};
  std::vector<int64_t> at;
  for (const auto& f : feature_fields()) {
    const int64_t idx = table.find_column(f.name);
    if (idx < 0) throw FormatError(std::string("preprocess: missing feature column '") + f.name + "'");
    at.push_back(idx);
  }
  for (const auto& col : table.columns) {
    bool known = extra.count(col) > 0;
    for (const auto& f : feature_fields()) known = known || col == f.name;
    if (!known) throw FormatError("preprocess: unknown feature column '" + col + "'");
  }
  return at;
}

}  // namespace

std::string feature_schema_hash(const std::vector<std::string>& names) {
  std::string joined;
  for (const auto& n : names) {
    joined += n;
    joined.push_back('\n');
  }
  return fnv1a64_hex(joined);
}

PreprocessorState fit_preprocessor(const RecordTable& table) {
  if (table.rows.empty()) throw DataError("preprocess: cannot fit on an empty table");
  const std::vector<int64_t> cols = map_feature_columns(table);
  const auto& fields = feature_fields();

  PreprocessorState st;
  const size_t nf = fields.size();
  st.feature_names.reserve(nf);
  st.nominal.reserve(nf);
  st.tables.resize(nf);
  st.means.resize(static_cast<Eigen::Index>(nf));
  st.mins.resize(static_cast<Eigen::Index>(nf));
  st.maxs.resize(static_cast<Eigen::Index>(nf));

  for (size_t f = 0; f < nf; ++f) {
    st.feature_names.emplace_back(fields[f].name);
    const bool nominal = fields[f].kind == FieldKind::kNominal;
    st.nominal.push_back(nominal);
    const size_t col = static_cast<size_t>(cols[f]);

    std::vector<double> encoded;
    encoded.reserve(table.rows.size());
    if (nominal) {
      std::set<std::string> values;
      for (const auto& row : table.rows) values.insert(row[col]);
      int code = 0;
      for (const auto& v : values) st.tables[f][v] = code++;  // lexicographic
      for (const auto& row : table.rows)
        encoded.push_back(static_cast<double>(st.tables[f].at(row[col])));
    } else {
      for (const auto& row : table.rows) {
        const std::string& cell = row[col];
        if (!cell.empty()) encoded.push_back(parse_cell(cell, fields[f].name));
      }
      if (encoded.empty())
        throw DataError(std::string("preprocess: feature '") + fields[f].name +
                        "' is missing in every record");
    }

    double mean = 0.0;
    for (double v : encoded) mean += v;
    mean /= static_cast<double>(encoded.size());
    st.means(static_cast<Eigen::Index>(f)) = mean;
    // bounds over post-imputation values; the imputed mean lies inside the
    // observed range, so the observed extrema are the bounds
    st.mins(static_cast<Eigen::Index>(f)) = *std::min_element(encoded.begin(), encoded.end());
    st.maxs(static_cast<Eigen::Index>(f)) = *std::max_element(encoded.begin(), encoded.end());
  }
  st.schema_hash = feature_schema_hash(st.feature_names);
  return st;
}

NormalizedData transform_records(const RecordTable& table, const PreprocessorState& state) {
  if (state.feature_names.empty()) throw ConfigError("preprocess: state is not fitted");
  const std::vector<int64_t> cols = map_feature_columns(table);
  const int64_t idx_col = table.find_column("record_index");
  const int64_t cat_col = table.find_column("attack_cat");
  const int64_t lab_col = table.find_column("label");

  NormalizedData out;
  out.schema_hash = state.schema_hash;
  const Eigen::Index n = static_cast<Eigen::Index>(table.rows.size());
  const Eigen::Index nf = static_cast<Eigen::Index>(state.feature_names.size());
  out.values.resize(n, nf);
  out.record_indices.reserve(table.rows.size());
  out.attack_cats.reserve(table.rows.size());
  out.labels.reserve(table.rows.size());

  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = table.rows[static_cast<size_t>(r)];
    for (Eigen::Index f = 0; f < nf; ++f) {
      const size_t col = static_cast<size_t>(cols[static_cast<size_t>(f)]);
      const std::string& cell = row[col];
      double v;
      if (state.nominal[static_cast<size_t>(f)]) {
        const auto& tab = state.tables[static_cast<size_t>(f)];
        const auto it = tab.find(cell);
        v = it != tab.end() ? it->second : state.unseen_code(static_cast<size_t>(f));
      } else if (cell.empty()) {
        v = state.means(f);
      } else {
        v = parse_cell(cell, state.feature_names[static_cast<size_t>(f)]);
      }
      const double span = state.maxs(f) - state.mins(f);
      const double scaled = span > 0.0 ? (v - state.mins(f)) / span : 0.0;
      out.values(r, f) = std::clamp(scaled, 0.0, 1.0);
    }
    out.record_indices.push_back(
        idx_col >= 0 ? std::strtoll(row[static_cast<size_t>(idx_col)].c_str(), nullptr, 10)
                     : static_cast<int64_t>(r));
    out.attack_cats.push_back(cat_col >= 0 ? row[static_cast<size_t>(cat_col)] : "");
    if (lab_col >= 0 && !row[static_cast<size_t>(lab_col)].empty())
      out.labels.emplace_back(static_cast<int>(
          std::strtol(row[static_cast<size_t>(lab_col)].c_str(), nullptr, 10)));
    else
      out.labels.emplace_back(std::nullopt);
  }
  return out;
}

void save_preprocessor(const PreprocessorState& state, const std::string& path) {
  nlohmann::json j;
  j["format"] = "flowhawk-preprocessor";
  j["version"] = kStateVersion;
  j["schema_hash"] = state.schema_hash;
  nlohmann::json feats = nlohmann::json::array();
  for (size_t f = 0; f < state.feature_names.size(); ++f) {
    nlohmann::json jf;
    jf["name"] = state.feature_names[f];
    jf["nominal"] = static_cast<bool>(state.nominal[f]);
    if (state.nominal[f]) jf["table"] = state.tables[f];
    jf["mean"] = state.means(static_cast<Eigen::Index>(f));
    jf["min"] = state.mins(static_cast<Eigen::Index>(f));
    jf["max"] = state.maxs(static_cast<Eigen::Index>(f));
    feats.push_back(std::move(jf));
  }
  j["features"] = std::move(feats);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write preprocessor state: " + path);
  out << j.dump(2) << "\n";
}

PreprocessorState load_preprocessor(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open preprocessor state: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("preprocessor state is not valid JSON: " + std::string(e.what()));
  }
  if (j.value("format", "") != "flowhawk-preprocessor" || j.value("version", 0) != kStateVersion)
    throw FormatError("unrecognized preprocessor state format: " + path);

  PreprocessorState st;
  const auto& feats = j.at("features");
  const size_t nf = feats.size();
  st.means.resize(static_cast<Eigen::Index>(nf));
  st.mins.resize(static_cast<Eigen::Index>(nf));
  st.maxs.resize(static_cast<Eigen::Index>(nf));
  st.tables.resize(nf);
  for (size_t f = 0; f < nf; ++f) {
    const auto& jf = feats[f];
    st.feature_names.push_back(jf.at("name").get<std::string>());
    st.nominal.push_back(jf.at("nominal").get<bool>());
    if (st.nominal[f]) st.tables[f] = jf.at("table").get<std::map<std::string, int>>();
    st.means(static_cast<Eigen::Index>(f)) = jf.at("mean").get<double>();
    st.mins(static_cast<Eigen::Index>(f)) = jf.at("min").get<double>();
    st.maxs(static_cast<Eigen::Index>(f)) = jf.at("max").get<double>();
  }
  st.schema_hash = j.at("schema_hash").get<std::string>();
  return st;
}

std::optional<std::string> training_label(const std::string& attack_cat,
                                          const std::optional<int>& label) {
  if (!attack_cat.empty()) return attack_cat;
  if (label && *label == 0) return std::string("Normal");
  return std::nullopt;
}

}  // namespace flowhawk
