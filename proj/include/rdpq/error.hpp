#pragma once

#include <stdexcept>
#include <string>

namespace rdpq {

// Coarse failure classes. The CLI maps them onto exit codes.
enum class error_kind {
  invalid_input,
  resource,
  no_quantile,
  singular_design,
  separation,
  convergence,
  degenerate_design,
  estimator_failure,
  data,
};

class error : public std::runtime_error {
public:
  error(error_kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  error_kind kind() const noexcept { return kind_; }

private:
  error_kind kind_;
};

inline const char* to_string(error_kind k) {
  switch (k) {
    case error_kind::invalid_input: return "invalid-input";
    case error_kind::resource: return "resource";
    case error_kind::no_quantile: return "no-quantile";
    case error_kind::singular_design: return "singular-design";
    case error_kind::separation: return "separation";
    case error_kind::convergence: return "convergence";
    case error_kind::degenerate_design: return "degenerate-design";
    case error_kind::estimator_failure: return "estimator-failure";
    case error_kind::data: return "data";
  }
  return "unknown";
}

}  // namespace rdpq
