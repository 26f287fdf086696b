#pragma once
#include <stdexcept>
#include <string>

namespace d2d {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration or malformed input file.
class ConfigError : public Error {
public:
    using Error::Error;
};

// User placement failed (region too small for the requested layout).
class PlacementError : public Error {
public:
    using Error::Error;
};

// Bisection bracket does not straddle the outage target.
class BracketError : public Error {
public:
    BracketError(const std::string& msg, double outage_lo, double outage_hi)
        : Error(msg), outage_lo(outage_lo), outage_hi(outage_hi) {}
    double outage_lo;
    double outage_hi;
};

// Monte-Carlo sample count too small for the requested outage target.
class SampleSizeError : public Error {
public:
    using Error::Error;
};

// Sub-user expansion demanded more RBs than the band holds.
class CapacityError : public Error {
public:
    using Error::Error;
};

// Malformed matrix handed to the matching solver.
class InputError : public Error {
public:
    using Error::Error;
};

// Guarded refusal: instance too large for an exhaustive method.
class SizeRefusalError : public Error {
public:
    using Error::Error;
};

}  // namespace d2d
