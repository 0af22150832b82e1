#include <doctest.h>

#include <filesystem>

#include "flowhawk/errors.hpp"
#include "flowhawk/preprocess.hpp"

using namespace flowhawk;

namespace {

// Minimal table carrying all 47 feature columns; rows patch selected cells.
RecordTable base_table(size_t rows) {
  RecordTable t;
  t.columns = csv_columns();
  for (size_t r = 0; r < rows; ++r) {
    std::vector<std::string> row(t.columns.size());
    row[0] = std::to_string(r);  // record_index
    for (size_t c = 1; c + 2 < t.columns.size(); ++c) row[c] = "0";
    // nominal defaults
    auto set = [&](const char* name, const std::string& v) {
      t.rows.empty() ? void() : void();
      row[static_cast<size_t>(t.find_column(name))] = v;
    };
    set("sip", "10.0.0.1");
    set("dip", "10.0.0.2");
    set("protocol", "tcp");
    set("state", "CON");
    set("service", "-");
    row[t.columns.size() - 2] = "";  // attack_cat
    row[t.columns.size() - 1] = "";  // label
    t.rows.push_back(std::move(row));
  }
  return t;
}

void set_cell(RecordTable& t, size_t row, const char* col, const std::string& v) {
  t.rows[row][static_cast<size_t>(t.find_column(col))] = v;
}

}  // namespace

TEST_CASE("fit: numeric min, max and mean") {
  RecordTable t = base_table(3);
  set_cell(t, 0, "sbytes", "0");
  set_cell(t, 1, "sbytes", "5");
  set_cell(t, 2, "sbytes", "10");
  PreprocessorState st = fit_preprocessor(t);
  const auto at = static_cast<Eigen::Index>(
      std::find(st.feature_names.begin(), st.feature_names.end(), "sbytes") -
      st.feature_names.begin());
  CHECK(st.mins(at) == 0.0);
  CHECK(st.maxs(at) == 10.0);
  CHECK(st.means(at) == 5.0);
}

TEST_CASE("fit: nominal table is lexicographic and dense from zero") {
  RecordTable t = base_table(3);
  set_cell(t, 0, "protocol", "tcp");
  set_cell(t, 1, "protocol", "udp");
  set_cell(t, 2, "protocol", "tcp");
  PreprocessorState st = fit_preprocessor(t);
  const size_t at = static_cast<size_t>(
      std::find(st.feature_names.begin(), st.feature_names.end(), "protocol") -
      st.feature_names.begin());
  REQUIRE(st.tables[at].size() == 2);
  CHECK(st.tables[at].at("tcp") == 0);
  CHECK(st.tables[at].at("udp") == 1);
  CHECK(st.unseen_code(at) == 2);
}

TEST_CASE("fit: missing numeric cells are imputed with the mean") {
  RecordTable t = base_table(4);
  set_cell(t, 0, "dbytes", "1");
  set_cell(t, 1, "dbytes", "2");
  set_cell(t, 2, "dbytes", "");
  set_cell(t, 3, "dbytes", "3");
  PreprocessorState st = fit_preprocessor(t);
  const auto at = static_cast<Eigen::Index>(
      std::find(st.feature_names.begin(), st.feature_names.end(), "dbytes") -
      st.feature_names.begin());
  CHECK(st.means(at) == doctest::Approx(2.0));

  NormalizedData nd = transform_records(t, st);
  // the missing cell receives the mean, then scales: (2-1)/(3-1) = 0.5
  CHECK(nd.values(2, at) == doctest::Approx(0.5));
}

TEST_CASE("fit: a feature absent from every record is an error naming it") {
  RecordTable t = base_table(3);
  for (size_t r = 0; r < 3; ++r) set_cell(t, r, "swin", "");
  try {
    fit_preprocessor(t);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("swin") != std::string::npos);
  }
}

TEST_CASE("transform: endpoints map to 0 and 1, outliers clamp") {
  RecordTable t = base_table(2);
  set_cell(t, 0, "spkts", "10");
  set_cell(t, 1, "spkts", "30");
  PreprocessorState st = fit_preprocessor(t);
  const auto at = static_cast<Eigen::Index>(
      std::find(st.feature_names.begin(), st.feature_names.end(), "spkts") -
      st.feature_names.begin());

  NormalizedData nd = transform_records(t, st);
  CHECK(nd.values(0, at) == 0.0);
  CHECK(nd.values(1, at) == 1.0);

  RecordTable probe = base_table(1);
  set_cell(probe, 0, "spkts", "60");  // 2x the training max
  CHECK(transform_records(probe, st).values(0, at) == 1.0);
}

TEST_CASE("transform: constant features map to 0 and unseen nominals clamp into [0,1]") {
  RecordTable t = base_table(2);
  PreprocessorState st = fit_preprocessor(t);
  NormalizedData nd = transform_records(t, st);
  CHECK(nd.values.minCoeff() >= 0.0);
  CHECK(nd.values.maxCoeff() <= 1.0);

  RecordTable probe = base_table(1);
  set_cell(probe, 0, "protocol", "sctp");  // unseen
  NormalizedData out = transform_records(probe, st);
  const auto at = static_cast<Eigen::Index>(
      std::find(st.feature_names.begin(), st.feature_names.end(), "protocol") -
      st.feature_names.begin());
  CHECK(out.values(0, at) >= 0.0);
  CHECK(out.values(0, at) <= 1.0);
}

TEST_CASE("transform: full pipeline on a five-record toy table matches hand computation") {
  RecordTable t = base_table(5);
  const char* sips[] = {"a.host", "b.host", "a.host", "c.host", "b.host"};
  const char* durations[] = {"0.000000", "2.000000", "4.000000", "6.000000", "8.000000"};
  const char* sbytes[] = {"100", "", "300", "200", "400"};
  for (size_t r = 0; r < 5; ++r) {
    set_cell(t, r, "sip", sips[r]);
    set_cell(t, r, "duration", durations[r]);
    set_cell(t, r, "sbytes", sbytes[r]);
  }
  PreprocessorState st = fit_preprocessor(t);
  NormalizedData nd = transform_records(t, st);

  const auto col = [&](const char* name) {
    return static_cast<Eigen::Index>(
        std::find(st.feature_names.begin(), st.feature_names.end(), name) -
        st.feature_names.begin());
  };
  // sip codes: a.host=0 b.host=1 c.host=2; min 0 max 2
  const double sip_want[] = {0.0, 0.5, 0.0, 1.0, 0.5};
  // duration: (v-0)/8
  const double dur_want[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  // sbytes: mean of {100,300,200,400} = 250; range 100..400
  const double sb_want[] = {0.0, 0.5, 2.0 / 3.0, 1.0 / 3.0, 1.0};
  for (size_t r = 0; r < 5; ++r) {
    CHECK(nd.values(static_cast<Eigen::Index>(r), col("sip")) == doctest::Approx(sip_want[r]));
    CHECK(nd.values(static_cast<Eigen::Index>(r), col("duration")) ==
          doctest::Approx(dur_want[r]));
    CHECK(nd.values(static_cast<Eigen::Index>(r), col("sbytes")) ==
          doctest::Approx(sb_want[r]).epsilon(1e-12));
  }
}

TEST_CASE("transform: unknown feature column is a schema error") {
  RecordTable t = base_table(2);
  PreprocessorState st = fit_preprocessor(t);
  t.columns.push_back("mystery");
  for (auto& row : t.rows) row.push_back("1");
  CHECK_THROWS_AS(transform_records(t, st), FormatError);
}

TEST_CASE("state: save/load round trip preserves every transform") {
  RecordTable t = base_table(6);
  for (size_t r = 0; r < 6; ++r) {
    set_cell(t, r, "sbytes", std::to_string(100 * r));
    set_cell(t, r, "service", r % 2 ? "http" : "dns");
    set_cell(t, r, "duration", r == 3 ? "" : std::to_string(0.5 * r));
  }
  PreprocessorState st = fit_preprocessor(t);
  const std::string path =
      (std::filesystem::temp_directory_path() / "flowhawk_state.json").string();
  save_preprocessor(st, path);
  PreprocessorState back = load_preprocessor(path);
  CHECK(back.schema_hash == st.schema_hash);

  NormalizedData a = transform_records(t, st);
  NormalizedData b = transform_records(t, back);
  CHECK((a.values - b.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("vectors stay in [0,1] when transforming shifted data") {
  RecordTable t = base_table(10);
  for (size_t r = 0; r < 10; ++r) {
    set_cell(t, r, "sbytes", std::to_string(50 + 10 * r));
    set_cell(t, r, "dload", std::to_string(1.5 * static_cast<double>(r)));
  }
  PreprocessorState st = fit_preprocessor(t);
  RecordTable shifted = base_table(10);
  for (size_t r = 0; r < 10; ++r) {
    set_cell(shifted, r, "sbytes", std::to_string(500 + 100 * r));  // far out of range
    set_cell(shifted, r, "dload", std::to_string(-3.0 + static_cast<double>(r)));
  }
  NormalizedData nd = transform_records(shifted, st);
  CHECK(nd.values.minCoeff() >= 0.0);
  CHECK(nd.values.maxCoeff() <= 1.0);
}

TEST_CASE("training labels derive from attack_cat or binary label") {
  CHECK(*training_label("Exploits", 1) == "Exploits");
  CHECK(*training_label("", 0) == "Normal");
  CHECK(!training_label("", std::nullopt).has_value());
  CHECK(!training_label("", 1).has_value());  // attack without category is unusable
}
