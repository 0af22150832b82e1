#include "flowhawk/window_features.hpp"

#include <tuple>

#include "flowhawk/errors.hpp"

namespace flowhawk {

int ttl_bucket(int64_t ttl, const WindowConfig& cfg) {
  int bucket = 0;
  for (int64_t bound : cfg.ttl_bucket_bounds) {
    if (ttl <= bound) return bucket;
    ++bucket;
  }
  return bucket;
}

void compute_window_features(std::vector<FlowRecord>& records, const WindowConfig& cfg) {
  if (cfg.window_size < 1) throw ConfigError("window_size must be >= 1");
  for (size_t i = 1; i < records.size(); ++i) {
    const auto prev = std::tie(records[i - 1].etime, records[i - 1].record_index);
    const auto cur = std::tie(records[i].etime, records[i].record_index);
    if (cur <= prev)
      throw DataError("compute_window_features: records not sorted by (etime, record_index)");
  }

  for (size_t i = 0; i < records.size(); ++i) {
    FlowRecord& r = records[i];
    r.eips_pts = (r.sip == r.dip && r.sport == r.dport) ? 1 : 0;
    const int my_bucket = ttl_bucket(r.sttl, cfg);
    const size_t begin = i + 1 >= static_cast<size_t>(cfg.window_size)
                             ? i + 1 - static_cast<size_t>(cfg.window_size)
                             : 0;
    int64_t esip_srv = 0, edip_srv = 0, edip = 0, esip = 0;
    int64_t esip_dpt = 0, edip_spt = 0, esip_dip = 0, state_ttl = 0;
    for (size_t j = begin; j <= i; ++j) {
      const FlowRecord& w = records[j];
      const bool same_sip = w.sip == r.sip;
      const bool same_dip = w.dip == r.dip;
      if (same_sip && w.service == r.service) ++esip_srv;
      if (same_dip && w.service == r.service) ++edip_srv;
      if (same_dip) ++edip;
      if (same_sip) ++esip;
      if (same_sip && w.dport == r.dport) ++esip_dpt;
      if (same_dip && w.sport == r.sport) ++edip_spt;
      if (same_sip && same_dip) ++esip_dip;
      if (w.state == r.state && ttl_bucket(w.sttl, cfg) == my_bucket) ++state_ttl;
    }
    r.esip_srv = esip_srv;
    r.edip_srv = edip_srv;
    r.edip = edip;
    r.esip = esip;
    r.esip_dpt = esip_dpt;
    r.edip_spt = edip_spt;
    r.esip_dip = esip_dip;
    r.state_ttl = state_ttl;
  }
}

}  // namespace flowhawk
