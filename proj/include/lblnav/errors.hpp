#pragma once

#include <stdexcept>
#include <string>

namespace lblnav {

/// Base class for all errors raised by this library. Catching this type is
/// sufficient to intercept any failure that originates here rather than in
/// the standard library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A requested range measurement would be taken closer to a beacon than the
/// configured minimum standoff distance.
class RangeTooSmall : public Error {
public:
    explicit RangeTooSmall(const std::string& what) : Error(what) {}
};

/// A filter state left the numerically sane region (entries exceeding 1e9 in
/// magnitude), which indicates divergence rather than a recoverable glitch.
class DivergenceDetected : public Error {
public:
    explicit DivergenceDetected(const std::string& what) : Error(what) {}
};

/// The innovation covariance lost positive definiteness, so no Kalman gain
/// can be computed.
class SingularInnovation : public Error {
public:
    explicit SingularInnovation(const std::string& what) : Error(what) {}
};

/// Beacon geometry does not span three dimensions, so position cannot be
/// recovered algebraically from ranges alone.
class DegenerateGeometry : public Error {
public:
    explicit DegenerateGeometry(const std::string& what) : Error(what) {}
};

/// A numerical integration failed to converge under step refinement.
class IntegrationFailure : public Error {
public:
    explicit IntegrationFailure(const std::string& what) : Error(what) {}
};

/// Input text could not be parsed at all (malformed JSON, wrong types,
/// unknown keys).
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what) : Error(what) {}
};

/// Input parsed cleanly but violates a documented constraint; the message
/// names the offending field and the constraint.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(what) {}
};

/// Filesystem operation failed (create, write, rename).
class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what) {}
};

} // namespace lblnav
