#pragma once

#include <array>
#include <string>
#include <string_view>

namespace agg {

/// Where items are buffered on the send side and grouped by destination worker.
///   WW  - per source worker, one buffer per destination worker
///   WPs - per source worker, one buffer per destination process, grouped at the destination
///   WsP - per source worker, one buffer per destination process, grouped at the source
///   PP  - per source process, one shared buffer per destination process
enum class SchemeKind { WW, WPs, WsP, PP };

inline constexpr std::array<SchemeKind, 4> kAllSchemes{SchemeKind::WW, SchemeKind::WPs, SchemeKind::WsP,
                                                       SchemeKind::PP};

/// Lower-case CLI token: ww | wps | wsp | pp.
std::string_view to_token(SchemeKind kind);
/// Display name: WW | WPs | WsP | PP.
std::string_view to_name(SchemeKind kind);
/// Accepts a token case-insensitively. Throws UsageError on anything else.
SchemeKind parse_scheme(std::string_view token);

}  // namespace agg
