#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gardner {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: bad grid, non-finite sample, mismatched grids.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// A non-finite sample, with the offending index.
class NonFiniteSample : public InvalidInput {
public:
    NonFiniteSample(std::size_t index, const std::string& what)
        : InvalidInput(what), index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

/// Spectral data that does not represent a real field.
class SymmetryError : public Error {
public:
    SymmetryError(long mode, double defect, const std::string& what)
        : Error(what), mode_(mode), defect_(defect) {}
    long mode() const noexcept { return mode_; }
    double defect() const noexcept { return defect_; }

private:
    long mode_;
    double defect_;
};

/// Pointwise powers in the nonlinearity left the double range.
class OverflowError : public Error {
public:
    OverflowError(double max_abs, const std::string& what) : Error(what), max_abs_(max_abs) {}
    double max_abs() const noexcept { return max_abs_; }

private:
    double max_abs_;
};

/// The Picard sequence grew instead of contracting.
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// No admissible dyadic step exists for the current data norm.
class StepSelectionError : public Error {
public:
    using Error::Error;
};

/// The running H^s norm exceeded the configured safety cap.
class NormCapExceeded : public Error {
public:
    NormCapExceeded(double norm, double cap, const std::string& what)
        : Error(what), norm_(norm), cap_(cap) {}
    double norm() const noexcept { return norm_; }
    double cap() const noexcept { return cap_; }

private:
    double norm_;
    double cap_;
};

/// The reference integrator produced a non-finite state.
class BlowUpError : public Error {
public:
    using Error::Error;
};

}  // namespace gardner
