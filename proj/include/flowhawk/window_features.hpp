#pragma once

#include <cstdint>
#include <vector>

#include "flowhawk/flow_record.hpp"

namespace flowhawk {

struct WindowConfig {
  int window_size = 100;  // the record itself plus its 99 predecessors
  // upper bounds of the TTL buckets below 255; 255 forms the last bucket
  std::vector<int64_t> ttl_bucket_bounds = {29, 63, 127, 254};
};

int ttl_bucket(int64_t ttl, const WindowConfig& cfg);

/// Fills features 36-47 in place. `records` must be sorted ascending by
/// (etime, record_index); each record's window is itself plus the
/// `window_size - 1` records immediately preceding it, so all counts are
/// self-inclusive (>= 1).
void compute_window_features(std::vector<FlowRecord>& records, const WindowConfig& cfg = {});

}  // namespace flowhawk
