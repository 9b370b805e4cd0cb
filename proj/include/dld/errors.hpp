#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dld {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter lies outside its admissible range (e.g. f outside the dataset hull).
class RangeError : public Error {
public:
    using Error::Error;
};

/// A mathematical precondition was violated (non-positive length scale, bad tolerance, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A contract on an argument was broken (non-unit normal, mismatched shapes, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

class ResolutionError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Particle could not be seeded with the requested clearance.
class PlacementError : public Error {
public:
    using Error::Error;
};

/// Particle trace exceeded its step cap (typically a trapped particle).
class StallError : public Error {
public:
    StallError(const std::string& what, double diameter)
        : Error(what), diameter_(diameter) {}
    double diameter() const noexcept { return diameter_; }

private:
    double diameter_;
};

class SpanError : public Error {
public:
    using Error::Error;
};

/// Interpolated wall normal is too small to be normalised.
class DegenerateNormalError : public Error {
public:
    using Error::Error;
};

class ExtrapolationError : public RangeError {
public:
    using RangeError::RangeError;
};

class TrainingError : public Error {
public:
    TrainingError(const std::string& what, int epoch) : Error(what), epoch_(epoch) {}
    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

class ShapeError : public ContractError {
public:
    using ContractError::ContractError;
};

class InfeasibleError : public Error {
public:
    InfeasibleError(const std::string& what, double best_dc_um)
        : Error(what), best_dc_um_(best_dc_um) {}
    double best_dc_um() const noexcept { return best_dc_um_; }

private:
    double best_dc_um_;
};

/// Malformed request (empty sweep specification, D1 >= D2, ...).
/// An objective evaluation failed; carries the offending decision vector.
class EvaluationError : public Error {
public:
    EvaluationError(const std::string& what, std::vector<double> genes) : Error(what), genes_(std::move(genes)) {}
    const std::vector<double>& genes() const noexcept { return genes_; }

private:
    std::vector<double> genes_;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace dld
