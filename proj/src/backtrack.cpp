#include "flowhawk/backtrack.hpp"

#include <ctime>

#include "flowhawk/errors.hpp"

namespace flowhawk {

std::string format_frame_time(int64_t epoch_us) {
  const time_t secs = static_cast<time_t>(epoch_us / 1000000);
  const long micros = static_cast<long>(epoch_us % 1000000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:%02d:%02d.%06ld", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, micros);
  return buf;
}

std::string filter_rule(const RegistryEntry& e) {
  std::string rule = "ip.addr==" + e.sip + " && ip.addr==" + e.dip;
  if (e.protocol == "tcp" || e.protocol == "udp") {
    rule += " && " + e.protocol + ".port==" + std::to_string(e.sport);
    rule += " && " + e.protocol + ".port==" + std::to_string(e.dport);
  } else {
    rule += " && " + e.protocol;
  }
  rule += " && frame.time >= \"" + format_frame_time(e.stime_us) + "\"";
  rule += " && frame.time <= \"" + format_frame_time(e.etime_us) + "\"";
  return rule;
}

BacktrackResult backtrack(int64_t record_index, const std::vector<RegistryEntry>& registry) {
  for (const auto& e : registry) {
    if (e.record_index != record_index) continue;
    BacktrackResult res;
    res.rule = filter_rule(e);
    res.ordinals = e.ordinals;
    res.capture = e.capture;
    return res;
  }
  throw DataError("backtrack: record_index " + std::to_string(record_index) +
                  " is not in the registry");
}

}  // namespace flowhawk
