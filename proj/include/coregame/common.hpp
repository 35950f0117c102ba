#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace coregame {

/// MBTI cognitive core: the perception/judgement function pair used as the
/// personalization key.
enum class CognitiveCore { NT, ST, NF, SF };

inline constexpr std::array<CognitiveCore, 4> kAllCores{
    CognitiveCore::NT, CognitiveCore::ST, CognitiveCore::NF, CognitiveCore::SF};

std::string_view to_string(CognitiveCore core);
std::optional<CognitiveCore> parse_core(std::string_view text);
CognitiveCore core_from_string(std::string_view text);  // throws Error

/// Seconds since the Unix epoch (UTC).
struct Timestamp {
  std::int64_t seconds = 0;
  auto operator<=>(const Timestamp&) const = default;
};

struct CalendarDate {
  int year = 1970;
  int month = 1;
  int day = 1;
  auto operator<=>(const CalendarDate&) const = default;
};

CalendarDate to_date(Timestamp ts);
Timestamp from_date(CalendarDate date);
/// "2022-03-01"
CalendarDate parse_iso_date(std::string_view text);

enum class ErrorCode {
  Validation,
  Conflict,
  Access,
  NotFound,
  Precondition,
  Derivation,
  Configuration,
  Auth,
  Forbidden,
  Liveness,
  Replay,
};

std::string_view to_string(ErrorCode code);

/// Engine-wide error. `code` is the machine-readable category surfaced over
/// the API; `field` names the offending input when there is one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string field = {})
      : std::runtime_error(std::move(message)), code_(code), field_(std::move(field)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorCode code_;
  std::string field_;
};

/// round-half-up(numerator / denominator) for non-negative operands.
constexpr std::int64_t round_half_up_div(std::int64_t numerator, std::int64_t denominator) {
  return (2 * numerator + denominator) / (2 * denominator);
}

/// Value stored in tenths (4.4 == 44). Used for all one-decimal ratings so
/// rounding is exact.
struct Tenths {
  std::int64_t value = 0;
  double as_double() const { return static_cast<double>(value) / 10.0; }
  auto operator<=>(const Tenths&) const = default;
};

/// Mean of `sum / count` rounded half-up to one decimal.
constexpr Tenths mean_tenths(std::int64_t sum, std::int64_t count) {
  return Tenths{round_half_up_div(sum * 10, count)};
}

std::string format_tenths(Tenths t);

}  // namespace coregame
