#ifndef GAZELAB_ERROR_HPP
#define GAZELAB_ERROR_HPP

#include <stdexcept>
#include <string>

namespace gazelab {

// Error taxonomy used across the library. The CLI maps these onto exit
// codes: config/shape/domain/parse -> 2, numeric -> 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Mismatched or invalid tensor extents.
struct ShapeError : Error {
  using Error::Error;
};

// Input values outside an operation's documented domain.
struct DomainError : Error {
  using Error::Error;
};

// Non-finite values or arithmetic overflow.
struct NumericError : Error {
  using Error::Error;
};

// Invalid configuration (bad key, inconsistent extents, missing path).
struct ConfigError : Error {
  using Error::Error;
};

// An operation invoked against stale or inconsistent internal state.
struct StateError : Error {
  using Error::Error;
};

// Malformed persistent data (tensor files, images, CSVs).
struct ParseError : Error {
  using Error::Error;
};

}  // namespace gazelab

#endif  // GAZELAB_ERROR_HPP
