#include "flowhawk/manifest.hpp"

#include <fstream>

#include <json.hpp>

#include "flowhawk/errors.hpp"

namespace flowhawk {

uint64_t fnv1a64(std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fnv1a64_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot hash missing file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fnv1a64_hex(bytes);
}

void write_output_manifest(const std::string& output_path, const std::string& config_hash,
                           uint64_t seed, const std::map<std::string, std::string>& input_hashes) {
  nlohmann::json j;
  j["tool"] = "flowhawk";
  j["version"] = kToolVersion;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["inputs"] = input_hashes;
  std::ofstream out(output_path + ".manifest.json", std::ios::trunc);
  if (!out) throw DataError("cannot write manifest for: " + output_path);
  out << j.dump(2) << "\n";
}

}  // namespace flowhawk
