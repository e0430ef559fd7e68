#include "agg/scheme.hpp"

#include <algorithm>
#include <cctype>
#include <string>

#include "agg/errors.hpp"

namespace agg {

std::string_view to_token(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::WW: return "ww";
    case SchemeKind::WPs: return "wps";
    case SchemeKind::WsP: return "wsp";
    case SchemeKind::PP: return "pp";
  }
  return "?";
}

std::string_view to_name(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::WW: return "WW";
    case SchemeKind::WPs: return "WPs";
    case SchemeKind::WsP: return "WsP";
    case SchemeKind::PP: return "PP";
  }
  return "?";
}

SchemeKind parse_scheme(std::string_view token) {
  std::string lower(token);
  std::ranges::transform(lower, lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (SchemeKind k : kAllSchemes)
    if (lower == to_token(k)) return k;
  throw UsageError("unknown scheme '" + std::string(token) + "' (expected ww|wps|wsp|pp)");
}

}  // namespace agg
