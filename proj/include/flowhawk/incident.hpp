#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace flowhawk {

/// One post-analysis alert, serialized as a JSON line in priority order.
struct Incident {
  int64_t record_index = -1;
  std::string category;
  int severity = 0;        // 1-5 from the category map
  int threat_score = 0;    // the ordering score; equals the severity level
  std::string rule;        // display-filter string from backtracking
  std::vector<uint64_t> packet_ordinals;
  std::string payload_ref;  // "<capture>#<record_index>"
};

void write_incidents(const std::vector<Incident>& incidents, const std::string& path);
std::vector<Incident> read_incidents(const std::string& path);

}  // namespace flowhawk
