#pragma once

#include <stdexcept>
#include <string>

namespace phi43 {

enum class Errc {
  invalid_parameter,
  invalid_data,
  symmetry_violation,
  unsupported_band,
  quadrature_failure,
  io_failure,
};

inline const char* to_string(Errc code) {
  switch (code) {
    case Errc::invalid_parameter: return "invalid-parameter";
    case Errc::invalid_data: return "invalid-data";
    case Errc::symmetry_violation: return "symmetry-violation";
    case Errc::unsupported_band: return "unsupported-band";
    case Errc::quadrature_failure: return "quadrature-failure";
    case Errc::io_failure: return "io-failure";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline void require(bool condition, Errc code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace phi43
