#include "provenance.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>

namespace prosodykit::tools {

std::string utc_timestamp() {
  std::time_t t{};
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json provenance_entry(std::string_view op, Json params) {
  return Json{{"op", op}, {"params", std::move(params)}, {"timestamp", utc_timestamp()}};
}

}  // namespace prosodykit::tools
