#include "flowhawk/incident.hpp"

#include <fstream>

#include <json.hpp>

#include "flowhawk/errors.hpp"

namespace flowhawk {

void write_incidents(const std::vector<Incident>& incidents, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write incident file: " + path);
  for (const auto& inc : incidents) {
    nlohmann::json j;
    j["record_index"] = inc.record_index;
    j["category"] = inc.category;
    j["severity"] = inc.severity;
    j["threat_score"] = inc.threat_score;
    j["rule"] = inc.rule;
    j["packet_ordinals"] = inc.packet_ordinals;
    j["payload_ref"] = inc.payload_ref;
    out << j.dump() << "\n";
  }
}

std::vector<Incident> read_incidents(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open incident file: " + path);
  std::vector<Incident> incidents;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("incident file line " + std::to_string(line_no) + ": " + e.what());
    }
    Incident inc;
    inc.record_index = j.at("record_index").get<int64_t>();
    inc.category = j.at("category").get<std::string>();
    inc.severity = j.at("severity").get<int>();
    inc.threat_score = j.at("threat_score").get<int>();
    inc.rule = j.at("rule").get<std::string>();
    inc.packet_ordinals = j.at("packet_ordinals").get<std::vector<uint64_t>>();
    inc.payload_ref = j.value("payload_ref", "");
    incidents.push_back(std::move(inc));
  }
  return incidents;
}

}  // namespace flowhawk
