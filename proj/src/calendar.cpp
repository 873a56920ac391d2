#include "vmmix/calendar.hpp"

#include <chrono>

namespace vmmix {

namespace {

int64_t FloorDiv(int64_t a, int64_t b) {
  int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

CivilTime ToCivil(int64_t epoch_seconds) {
  using namespace std::chrono;
  const int64_t day_number = FloorDiv(epoch_seconds, 86400);
  const sys_days days{std::chrono::days{day_number}};
  const year_month_day ymd{days};
  const weekday wd{days};
  CivilTime civil{};
  civil.year = static_cast<int>(ymd.year());
  civil.month = static_cast<int>(static_cast<unsigned>(ymd.month()));
  civil.day_of_month = static_cast<int>(static_cast<unsigned>(ymd.day()));
  civil.day_of_week = static_cast<int>((wd.c_encoding() + 6) % 7);
  civil.hour = static_cast<int>((epoch_seconds - day_number * 86400) / 3600);
  return civil;
}

int64_t MonthIndex(int64_t epoch_seconds) {
  const CivilTime c = ToCivil(epoch_seconds);
  return static_cast<int64_t>(c.year - 1970) * 12 + (c.month - 1);
}

int64_t MonthStart(int64_t month_index) {
  using namespace std::chrono;
  const int64_t y = 1970 + FloorDiv(month_index, 12);
  const unsigned m = static_cast<unsigned>(month_index - FloorDiv(month_index, 12) * 12) + 1;
  const sys_days days{year{static_cast<int>(y)} / month{m} / day{1}};
  return static_cast<int64_t>(days.time_since_epoch().count()) * 86400;
}

double MonthHours(int64_t month_index) {
  return static_cast<double>(MonthStart(month_index + 1) - MonthStart(month_index)) / kSecondsPerHour;
}

}  // namespace vmmix
