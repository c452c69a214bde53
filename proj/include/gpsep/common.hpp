#ifndef GPSEP_COMMON_HPP
#define GPSEP_COMMON_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace gpsep {

// Input/configuration problems: bad files, bad dimensions, invalid parameters.
// The CLI maps these to exit code 1.
struct InputError : std::runtime_error {
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failures: positive-definiteness loss, rank deficiency, degenerate
// data. The CLI maps these to exit code 2.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-fatal diagnostics (jitter escalation, derivative kinks, capped grids).
// Collected per thread so concurrent chains do not interleave records.
struct WarningRecord {
  std::string where;
  std::string message;
};

void warn(std::string where, std::string message);
std::vector<WarningRecord> drain_warnings();
std::size_t warning_count();

}  // namespace gpsep

#endif
