#ifndef POISSEQ_ERROR_HPP
#define POISSEQ_ERROR_HPP

#include <stdexcept>
#include <string>

namespace poisseq {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text (TSV, JSON). The message carries the location.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Input violates a documented precondition or data invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Filesystem failure; the message names the path.
class IoError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure could not produce a result for this input
/// (e.g. a size factor that would be zero).
class EstimationError : public Error {
public:
    using Error::Error;
};

} // namespace poisseq

#endif
