#include "flowhawk/priority.hpp"

#include <algorithm>
#include <numeric>

#include "flowhawk/errors.hpp"

namespace flowhawk {

std::map<std::string, int> default_severity_map() {
  return {
      {"Analysis", 1},
      {"Reconnaissance", 2},
      {"Fuzzers", 2},
      {"DoS", 3},
      {"Generic", 4},
      {"Backdoors", 4},
      {"Worms", 4},
      {"Exploits", 5},
      {"Shellcode", 5},
  };
}

int severity_of(const std::string& category, const std::map<std::string, int>& severity_map) {
  const auto it = severity_map.find(category);
  if (it == severity_map.end())
    throw ConfigError("no severity level configured for category '" + category + "'");
  return it->second;
}

std::vector<size_t> assess_priority(const std::vector<std::string>& categories,
                                    const std::map<std::string, int>& severity_map) {
  std::vector<int> scores;
  scores.reserve(categories.size());
  for (const auto& c : categories) scores.push_back(severity_of(c, severity_map));
  std::vector<size_t> order(categories.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace flowhawk
