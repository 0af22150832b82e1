#include <doctest.h>

#include <filesystem>
#include <random>

#include "flowhawk/backtrack.hpp"
#include "flowhawk/capture.hpp"
#include "flowhawk/capture_writer.hpp"
#include "flowhawk/correlation.hpp"
#include "flowhawk/errors.hpp"
#include "flowhawk/flow_assembler.hpp"
#include "flowhawk/incident.hpp"
#include "flowhawk/priority.hpp"

using namespace flowhawk;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("flowhawk_an_" + name)).string();
}

// Clustered vectors with planted contaminants far outside each cluster.
struct PlantedCase {
  std::vector<std::string> predictions;
  Eigen::MatrixXd vectors;
  Eigen::MatrixXd softmax;
  std::vector<int64_t> indices;
  std::vector<int64_t> planted_in_normal, planted_in_abnormal;
};

PlantedCase make_planted(uint64_t seed, int clean_per_cluster = 95, int planted = 5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.02);
  const int f = 8;
  const int n = 2 * (clean_per_cluster + planted);
  PlantedCase pc;
  pc.vectors.resize(n, f);
  pc.softmax.resize(n, 3);  // Normal, DoS, Exploits
  int row = 0;
  auto add = [&](double center, const std::string& pred, double p_dos, bool plant_list_normal) {
    for (int c = 0; c < f; ++c) pc.vectors(row, c) = center + noise(rng);
    pc.predictions.push_back(pred);
    pc.softmax(row, 0) = 1.0 - p_dos - 0.05;
    pc.softmax(row, 1) = p_dos;
    pc.softmax(row, 2) = 0.05;
    pc.indices.push_back(row);
    if (plant_list_normal) pc.planted_in_normal.push_back(row);
    ++row;
  };
  // Normal cluster: clean normals near 0.2, planted attack-like points near 0.9
  for (int i = 0; i < clean_per_cluster; ++i) add(0.2, "Normal", 0.1, false);
  for (int i = 0; i < planted; ++i) add(0.9, "Normal", 0.8, true);
  // Abnormal cluster: clean attacks near 0.7, planted normal-like points near 0.05
  for (int i = 0; i < clean_per_cluster; ++i) add(0.7, "DoS", 0.9, false);
  for (int i = 0; i < planted; ++i) {
    pc.planted_in_abnormal.push_back(row);
    add(0.05, "DoS", 0.2, false);
  }
  return pc;
}

}  // namespace

TEST_CASE("correlation: a huge threshold passes everything through untouched") {
  PlantedCase pc = make_planted(501);
  CorrelationConfig cfg;
  cfg.lof_threshold = 1e9;
  auto res = correlation_analysis(pc.predictions, pc.softmax, {"Normal", "DoS", "Exploits"},
                                  pc.vectors, pc.indices, cfg);
  CHECK(res.flips.empty());
  CHECK(res.corrected == pc.predictions);
}

TEST_CASE("correlation: planted contaminants flip, clean points stay") {
  PlantedCase pc = make_planted(502);
  CorrelationConfig cfg;
  cfg.lof_threshold = 2.0;
  auto res = correlation_analysis(pc.predictions, pc.softmax, {"Normal", "DoS", "Exploits"},
                                  pc.vectors, pc.indices, cfg);
  CHECK(res.corrected.size() == pc.predictions.size());

  // every flip is logged, and only logged records changed
  size_t changed = 0;
  for (size_t i = 0; i < res.corrected.size(); ++i) changed += res.corrected[i] != pc.predictions[i];
  CHECK(changed == res.flips.size());

  size_t normal_recovered = 0;
  for (int64_t idx : pc.planted_in_normal)
    if (res.corrected[static_cast<size_t>(idx)] != "Normal") ++normal_recovered;
  size_t abnormal_recovered = 0;
  for (int64_t idx : pc.planted_in_abnormal)
    if (res.corrected[static_cast<size_t>(idx)] == "Normal") ++abnormal_recovered;
  CHECK(normal_recovered >= 4);    // >= 80% of 5 in this fixture
  CHECK(abnormal_recovered >= 4);

  // planted false negatives relabel to the strongest non-Normal class
  for (int64_t idx : pc.planted_in_normal)
    if (res.corrected[static_cast<size_t>(idx)] != "Normal")
      CHECK(res.corrected[static_cast<size_t>(idx)] == "DoS");
}

TEST_CASE("correlation: clusters below lof_k+1 pass through with a warning") {
  PlantedCase pc = make_planted(503, 10, 0);  // 10 per cluster, k=25 default
  auto res = correlation_analysis(pc.predictions, pc.softmax, {"Normal", "DoS", "Exploits"},
                                  pc.vectors, pc.indices, {});
  CHECK(res.corrected == pc.predictions);
  CHECK(res.warnings.size() == 2);
}

TEST_CASE("correlation: record count never changes") {
  PlantedCase pc = make_planted(504);
  CorrelationConfig cfg;
  cfg.lof_threshold = 1.2;
  auto res = correlation_analysis(pc.predictions, pc.softmax, {"Normal", "DoS", "Exploits"},
                                  pc.vectors, pc.indices, cfg);
  CHECK(res.corrected.size() == pc.predictions.size());
}

// ---------------------------------------------------------------------------

TEST_CASE("backtrack: single-packet flow yields its tuple rule and one ordinal") {
  const std::string cap = temp_path("bt1.pcap");
  PacketSpec p;
  p.ts_us = 1421929000123456;  // 2015-01-22 12:16:40.123456 UTC
  p.src_ip = "175.45.176.1";
  p.src_port = 13284;
  p.dst_ip = "149.171.126.16";
  p.dst_port = 53;
  p.protocol = 17;
  p.payload = ascii_payload("q");
  write_pcap(cap, {p});
  AssemblyResult res = assemble_flows(ingest_capture(cap).packets, {}, cap);
  auto bt = backtrack(0, res.registry);
  CHECK(bt.ordinals == std::vector<uint64_t>{1});
  CHECK(bt.rule.find("ip.addr==175.45.176.1") != std::string::npos);
  CHECK(bt.rule.find("ip.addr==149.171.126.16") != std::string::npos);
  CHECK(bt.rule.find("udp.port==13284") != std::string::npos);
  CHECK(bt.rule.find("udp.port==53") != std::string::npos);
  CHECK(bt.rule.find("frame.time >= \"2015-01-22 12:16:40.123456\"") != std::string::npos);
  CHECK(bt.rule.find("frame.time <= \"2015-01-22 12:16:40.123456\"") != std::string::npos);
}

TEST_CASE("backtrack: a 10-packet flow among decoys recovers exactly its ordinals") {
  using namespace tcpflag;
  const std::string cap = temp_path("bt2.pcap");
  std::vector<PacketSpec> pkts;
  std::vector<uint64_t> expected;
  int64_t t = 1000000;
  for (int i = 0; i < 30; ++i) {
    t += 997;
    PacketSpec p;
    p.ts_us = t;
    if (i % 3 == 1) {  // the flow of interest, 10 packets
      p.src_ip = "10.5.5.1";
      p.src_port = 46000;
      p.dst_ip = "10.5.5.2";
      p.dst_port = 443;
      p.protocol = 6;
      p.tcp_flags = kAck;
      p.tcp_seq = static_cast<uint32_t>(100 + i);
      p.payload = ascii_payload("data");
      expected.push_back(static_cast<uint64_t>(i + 1));
    } else {  // decoys on neighboring tuples
      p.src_ip = "10.5.5.1";
      p.src_port = static_cast<uint16_t>(40000 + i % 3);
      p.dst_ip = "10.5.5.3";
      p.dst_port = 443;
      p.protocol = 6;
      p.tcp_flags = kAck;
      p.tcp_seq = static_cast<uint32_t>(i);
    }
    pkts.push_back(p);
  }
  write_pcap(cap, pkts);
  AssemblyResult res = assemble_flows(ingest_capture(cap).packets, {}, cap);
  int64_t target = -1;
  for (const auto& e : res.registry)
    if (e.sport == 46000) target = e.record_index;
  REQUIRE(target >= 0);
  auto bt = backtrack(target, res.registry);
  CHECK(bt.ordinals == expected);
}

TEST_CASE("backtrack: unknown record index is a lookup error") {
  CHECK_THROWS_AS(backtrack(99, {}), DataError);
}

// ---------------------------------------------------------------------------

TEST_CASE("priority: the four-threat fixture orders by descending severity") {
  std::vector<std::string> cats = {"Fuzzers", "Exploits", "Analysis", "DoS"};
  auto order = assess_priority(cats, default_severity_map());
  std::vector<std::string> got;
  for (size_t i : order) got.push_back(cats[i]);
  CHECK(got == std::vector<std::string>{"Exploits", "DoS", "Fuzzers", "Analysis"});
}

TEST_CASE("priority: single threat maps to itself") {
  auto order = assess_priority({"Worms"}, default_severity_map());
  CHECK(order == std::vector<size_t>{0});
}

TEST_CASE("priority: equal levels preserve the original relative order") {
  auto order = assess_priority({"Reconnaissance", "Fuzzers"}, default_severity_map());
  CHECK(order == std::vector<size_t>{0, 1});
}

TEST_CASE("priority: unmapped category is a configuration error") {
  CHECK_THROWS_AS(assess_priority({"Martians"}, default_severity_map()), ConfigError);
}

TEST_CASE("priority: output is a stable descending permutation on random sequences") {
  std::mt19937_64 rng(505);
  const std::vector<std::string> cats = {"Analysis", "Reconnaissance", "Fuzzers", "DoS",
                                         "Generic",  "Backdoors",      "Worms",   "Exploits",
                                         "Shellcode"};
  const auto severity = default_severity_map();
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> seq;
    for (int i = 0; i < 50; ++i) seq.push_back(cats[rng() % cats.size()]);
    auto order = assess_priority(seq, severity);
    std::vector<bool> seen(seq.size(), false);
    for (size_t i : order) {
      REQUIRE(i < seq.size());
      CHECK(!seen[i]);
      seen[i] = true;
    }
    for (size_t k = 1; k < order.size(); ++k) {
      const int prev = severity.at(seq[order[k - 1]]);
      const int cur = severity.at(seq[order[k]]);
      CHECK(prev >= cur);
      if (prev == cur) CHECK(order[k - 1] < order[k]);  // stability
    }
  }
}

// ---------------------------------------------------------------------------

TEST_CASE("incidents: JSON-lines round trip") {
  Incident a;
  a.record_index = 7;
  a.category = "Exploits";
  a.severity = 5;
  a.threat_score = 5;
  a.rule = "ip.addr==1.2.3.4 && tcp.port==80";
  a.packet_ordinals = {3, 4, 5};
  a.payload_ref = "cap.pcap#7";
  Incident b;
  b.record_index = 9;
  b.category = "Analysis";
  b.severity = 1;
  b.threat_score = 1;
  const std::string path = temp_path("inc.jsonl");
  write_incidents({a, b}, path);
  auto back = read_incidents(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].record_index == 7);
  CHECK(back[0].category == "Exploits");
  CHECK(back[0].packet_ordinals == std::vector<uint64_t>{3, 4, 5});
  CHECK(back[0].payload_ref == "cap.pcap#7");
  CHECK(back[1].severity == 1);
}
