#pragma once

#include <stdexcept>
#include <string>

namespace hcorr {

// Base class for every error raised by the library. The CLI maps the
// concrete subclasses onto its documented exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

// Malformed input files, unknown keys, unparsable numbers.
class ParseError : public Error {
public:
    using Error::Error;
};

class EstimationError : public Error {
public:
    using Error::Error;
};

class MissingObservableError : public EstimationError {
public:
    using EstimationError::EstimationError;
};

class SingularSystemError : public EstimationError {
public:
    using EstimationError::EstimationError;
};

class ZeroVarianceError : public EstimationError {
public:
    using EstimationError::EstimationError;
};

class CompletionError : public EstimationError {
public:
    using EstimationError::EstimationError;
};

// Raised by psd_repair and by consumers that require a PSD matrix
// (correlated increment generation).
class RepairError : public Error {
public:
    using Error::Error;
};

}  // namespace hcorr
