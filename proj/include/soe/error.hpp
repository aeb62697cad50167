#pragma once

#include <stdexcept>
#include <string>

namespace soe {

// Base class for all library failures. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Domain invariant violated (non-unit axis, bad rotation matrix, bad range).
class ValidationError : public Error {
public:
  using Error::Error;
};

// Tensor / feature shape incompatibility.
class ShapeError : public Error {
public:
  using Error::Error;
};

// NaN/Inf produced by a tensor op, or a non-finite loss.
class NumericError : public Error {
public:
  using Error::Error;
};

// File format or filesystem failure (SOEV/SOEC readers, manifests).
class IoError : public Error {
public:
  using Error::Error;
};

// Metric is mathematically undefined for the given inputs.
class MetricError : public Error {
public:
  using Error::Error;
};

// Config file syntax, unknown key, type or range error.
class ConfigError : public Error {
public:
  using Error::Error;
};

} // namespace soe
