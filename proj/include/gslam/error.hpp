#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gslam {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error {
  using Error::Error;
};

// 1 - tan(omega) * H / L too close to zero.
struct SingularityError : Error {
  using Error::Error;
};

struct DegenerateGeometry : Error {
  using Error::Error;
};

struct EmptyMapError : Error {
  using Error::Error;
};

// A per-beam marginal fell below the representable floor; the particle is lost.
struct UnderflowError : Error {
  using Error::Error;
};

// Every particle has diverged during a step.
struct DivergenceError : Error {
  DivergenceError(std::size_t step, const std::string& what)
      : Error("diverged at step " + std::to_string(step) + ": " + what), step(step) {}
  std::size_t step;
};

struct ParseError : Error {
  ParseError(std::size_t line, std::size_t column, const std::string& reason)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + reason),
        line(line),
        column(column) {}
  std::size_t line;
  std::size_t column;
};

struct ConfigError : Error {
  ConfigError(std::string field, const std::string& reason)
      : Error(field + ": " + reason), field(std::move(field)) {}
  std::string field;
};

}  // namespace gslam
