#pragma once

#include <stdexcept>
#include <string>

namespace leaklab {

// Malformed input: bad JSON, unknown enum value, unparseable script.
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Caller broke a contract (bad arguments, wrong call order).
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

// A harvest append or replay violated the hash chain.
struct IntegrityError : std::runtime_error {
  explicit IntegrityError(const std::string& what) : std::runtime_error(what) {}
};

// An external audit process misbehaved (bad wire output, crash, timeout).
struct AdapterFault : std::runtime_error {
  explicit AdapterFault(const std::string& what) : std::runtime_error(what) {}
};

// An operator cannot apply to the given variant (e.g. chain insert on a
// fixed-topology single skill).
struct InapplicableOperator : std::runtime_error {
  explicit InapplicableOperator(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace leaklab
