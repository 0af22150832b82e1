#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

namespace flowhawk {

inline constexpr const char* kToolVersion = "0.1.0";

uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);
std::string hash_file(const std::string& path);

/// Writes `<output>.manifest.json` describing how an artifact was produced:
/// tool version, config hash, seed and input-file hashes. Deliberately free of
/// timestamps so reruns are byte-identical.
void write_output_manifest(const std::string& output_path, const std::string& config_hash,
                           uint64_t seed, const std::map<std::string, std::string>& input_hashes);

}  // namespace flowhawk
