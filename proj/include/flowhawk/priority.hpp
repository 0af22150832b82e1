#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace flowhawk {

/// Severity levels 1 (low impact) … 5 (high impact) per attack category.
std::map<std::string, int> default_severity_map();

/// Level of one category; unmapped categories are configuration errors.
int severity_of(const std::string& category, const std::map<std::string, int>& severity_map);

/// Orders threats for response: a stable permutation of [0, n) sorted by
/// descending severity of the matching category.
std::vector<size_t> assess_priority(const std::vector<std::string>& categories,
                                    const std::map<std::string, int>& severity_map);

}  // namespace flowhawk
