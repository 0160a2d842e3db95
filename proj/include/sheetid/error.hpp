#pragma once

#include <stdexcept>
#include <string>

namespace sheetid {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad caller input: missing files, malformed feature data, unknown ids.
class InputError : public Error {
public:
    using Error::Error;
};

/// The call itself is inconsistent (wrong n for an index, bad config).
class UsageError : public Error {
public:
    using Error::Error;
};

/// A search or lookup asked for an n-gram index the bundle does not hold.
class IndexAbsentError : public UsageError {
public:
    using UsageError::UsageError;
};

/// Bundle file could not be decoded.
class FormatError : public Error {
public:
    using Error::Error;
};

class VersionError : public FormatError {
public:
    using FormatError::FormatError;
};

class TruncatedError : public FormatError {
public:
    using FormatError::FormatError;
};

class ChecksumError : public FormatError {
public:
    using FormatError::FormatError;
};

} // namespace sheetid
