#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flowhawk/flow_record.hpp"

namespace flowhawk {

/// Raw CSV view: header plus untyped cells. The preprocessing stage consumes
/// this form so that missing cells (empty strings) survive parsing.
struct RecordTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  int64_t find_column(const std::string& name) const {
    for (size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return static_cast<int64_t>(i);
    return -1;
  }
};

/// Maps one record back to its packets: capture file, Wireshark-style 1-based
/// frame ordinals, and the microsecond flow bounds used for filter rules.
struct RegistryEntry {
  int64_t record_index = -1;
  std::string capture;
  std::string sip;
  int64_t sport = 0;
  std::string dip;
  int64_t dport = 0;
  std::string protocol;
  std::string service;
  int64_t stime_us = 0;
  int64_t etime_us = 0;
  std::vector<uint64_t> ordinals;
};

/// Writes the fixed 50-column CSV (header always present); returns the record
/// count written. Floats carry six decimals, timestamps are epoch seconds.
int64_t export_records(const std::vector<FlowRecord>& records, const std::string& path);

/// Strict inverse of export_records: the column set must match exactly.
std::vector<FlowRecord> import_records(const std::string& path);

RecordTable read_table(const std::string& path);

void write_registry(const std::vector<RegistryEntry>& entries, const std::string& path);
std::vector<RegistryEntry> read_registry(const std::string& path);

}  // namespace flowhawk
