#pragma once

#include <stdexcept>
#include <string>

namespace rollcast {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// -- calendar ---------------------------------------------------------------

class NonTradingDay : public Error {
public:
    using Error::Error;
};

// -- ingest -----------------------------------------------------------------

class ParseError : public Error {
public:
    using Error::Error;
};

class NonMonotonic : public Error {
public:
    using Error::Error;
};

class NonPositiveValue : public Error {
public:
    using Error::Error;
};

class EmptyIntersection : public Error {
public:
    using Error::Error;
};

// -- features ---------------------------------------------------------------

class TooShort : public Error {
public:
    using Error::Error;
};

class ColumnMismatch : public Error {
public:
    using Error::Error;
};

// -- learners ---------------------------------------------------------------

class InvalidHyperparameters : public Error {
public:
    using Error::Error;
};

class DegenerateData : public Error {
public:
    using Error::Error;
};

class NonFiniteLoss : public Error {
public:
    using Error::Error;
};

// -- metrics ----------------------------------------------------------------

class LengthMismatch : public Error {
public:
    using Error::Error;
};

class EmptyInput : public Error {
public:
    using Error::Error;
};

class ZeroActual : public Error {
public:
    using Error::Error;
};

// -- backtest ---------------------------------------------------------------

class InsufficientHistory : public Error {
public:
    using Error::Error;
};

// -- reports ----------------------------------------------------------------

class MalformedReport : public Error {
public:
    using Error::Error;
};

}  // namespace rollcast
