#include "coregame/common.hpp"

#include <charconv>
#include <cstdio>

namespace coregame {

std::string_view to_string(CognitiveCore core) {
  switch (core) {
    case CognitiveCore::NT: return "NT";
    case CognitiveCore::ST: return "ST";
    case CognitiveCore::NF: return "NF";
    case CognitiveCore::SF: return "SF";
  }
  return "??";
}

std::optional<CognitiveCore> parse_core(std::string_view text) {
  for (auto core : kAllCores) {
    if (to_string(core) == text) return core;
  }
  return std::nullopt;
}

CognitiveCore core_from_string(std::string_view text) {
  if (auto core = parse_core(text)) return *core;
  throw Error(ErrorCode::Validation, "unknown cognitive core '" + std::string(text) + "'", "core");
}

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Validation: return "validation_error";
    case ErrorCode::Conflict: return "conflict";
    case ErrorCode::Access: return "access_denied";
    case ErrorCode::NotFound: return "not_found";
    case ErrorCode::Precondition: return "precondition_failed";
    case ErrorCode::Derivation: return "derivation_error";
    case ErrorCode::Configuration: return "configuration_error";
    case ErrorCode::Auth: return "unauthenticated";
    case ErrorCode::Forbidden: return "forbidden";
    case ErrorCode::Liveness: return "liveness_failure";
    case ErrorCode::Replay: return "replay_rejected";
  }
  return "error";
}

// Civil-from-days / days-from-civil (Howard Hinnant's algorithms).
namespace {

constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

constexpr CalendarDate civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return CalendarDate{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

int parse_int(std::string_view text, std::string_view what) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::Validation, "malformed " + std::string(what) + " '" + std::string(text) + "'",
                std::string(what));
  }
  return value;
}

}  // namespace

CalendarDate to_date(Timestamp ts) {
  std::int64_t days = ts.seconds / 86400;
  if (ts.seconds < 0 && ts.seconds % 86400 != 0) --days;
  return civil_from_days(days);
}

Timestamp from_date(CalendarDate date) {
  return Timestamp{days_from_civil(date.year, static_cast<unsigned>(date.month),
                                   static_cast<unsigned>(date.day)) *
                   86400};
}

CalendarDate parse_iso_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw Error(ErrorCode::Validation, "expected YYYY-MM-DD, got '" + std::string(text) + "'", "date");
  }
  CalendarDate date{parse_int(text.substr(0, 4), "date"), parse_int(text.substr(5, 2), "date"),
                    parse_int(text.substr(8, 2), "date")};
  if (date.month < 1 || date.month > 12 || date.day < 1 || date.day > 31) {
    throw Error(ErrorCode::Validation, "date out of range '" + std::string(text) + "'", "date");
  }
  return date;
}

std::string format_tenths(Tenths t) {
  char buf[32];
  const auto whole = t.value / 10;
  const auto frac = t.value % 10;
  std::snprintf(buf, sizeof buf, "%lld.%lld", static_cast<long long>(whole), static_cast<long long>(frac < 0 ? -frac : frac));
  return buf;
}

}  // namespace coregame
