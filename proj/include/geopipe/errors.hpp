#pragma once

#include <stdexcept>
#include <string>

namespace geopipe {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input file or record (bad JSON, missing field, invalid value).
struct SchemaError : Error {
  using Error::Error;
};

struct SizeMismatchError : Error {
  using Error::Error;
};

struct DuplicatePanoIdError : Error {
  using Error::Error;
};

/// calibrate() needs both label classes present.
struct SingleClassError : Error {
  using Error::Error;
};

struct TransportError : Error {
  using Error::Error;
};

/// A subset of the requested tiles failed even after retries.
struct PartialFetchError : TransportError {
  using TransportError::TransportError;
};

struct CacheCorruptionError : Error {
  using Error::Error;
};

struct OutOfFootprintError : Error {
  using Error::Error;
};

struct GeodesicConvergenceError : Error {
  using Error::Error;
};

}  // namespace geopipe
