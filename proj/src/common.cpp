#include "gpsep/common.hpp"

namespace gpsep {

namespace {
thread_local std::vector<WarningRecord> t_warnings;
}

void warn(std::string where, std::string message) {
  t_warnings.push_back({std::move(where), std::move(message)});
}

std::vector<WarningRecord> drain_warnings() {
  std::vector<WarningRecord> out;
  out.swap(t_warnings);
  return out;
}

std::size_t warning_count() { return t_warnings.size(); }

}  // namespace gpsep
