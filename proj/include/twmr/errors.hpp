#pragma once

#include <stdexcept>
#include <string>

namespace twmr {

/// Bad inputs: out-of-domain parameters, malformed configs, infeasible scenarios.
class validation_error : public std::runtime_error {
  public:
    explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

/// Queueing system has no steady state (service rate does not exceed arrival rate).
class instability_error : public validation_error {
  public:
    explicit instability_error(const std::string& what) : validation_error(what) {}
};

/// Internal invariant broke mid-run (e.g. a scheme violated its sum-rate constraint).
class consistency_error : public std::runtime_error {
  public:
    explicit consistency_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace twmr
