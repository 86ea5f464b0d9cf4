// errors.hpp — Error types shared across the library and the CLI exit-code map

#pragma once

#include <stdexcept>
#include <string>

namespace fluctuon {

// Exit codes used by the command-line front end. Library code throws the
// exception types below; the CLI maps them to these codes.
enum class ExitCode : int {
    ok = 0,
    unexpected = 1,
    config = 2,
    io = 3,
    accuracy = 4,
    non_convergence = 5,
};

// A numerical routine could not reach the requested tolerance. Carries the
// best estimate obtained so far and its error estimate.
class AccuracyError : public std::runtime_error {
  public:
    AccuracyError(const std::string& what, double best_estimate, double error_estimate)
        : std::runtime_error(what), best_(best_estimate), err_(error_estimate) {}

    double best_estimate() const { return best_; }
    double error_estimate() const { return err_; }

  private:
    double best_;
    double err_;
};

class NonConvergenceError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace fluctuon
