#pragma once

#include <string>
#include <string_view>
#include <utility>

#include "arena/types.hpp"

namespace arena::detail {

// "https://host:8443/api/v4/" -> {"https://host:8443", "/api/v4"}
inline std::pair<std::string, std::string> split_base_url(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw ConfigError("base URL needs a scheme: " + std::string(url));
  }
  const auto path_start = url.find('/', scheme_end + 3);
  std::string origin(url.substr(0, path_start));
  std::string prefix = path_start == std::string_view::npos ? "" : std::string(url.substr(path_start));
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {origin, prefix};
}

}  // namespace arena::detail
