#pragma once

#include <stdexcept>
#include <string>

namespace mkflow {

// Invalid argument to an operation (bad index, bad parameter range, ...).
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Input touches or crosses the boundary of the admissible cone/domain.
// `index` is the offending component when known, -1 otherwise.
class DomainBoundaryError : public std::domain_error {
public:
    DomainBoundaryError(const std::string& what, int index = -1)
        : std::domain_error(what), index_(index) {}
    int index() const noexcept { return index_; }

private:
    int index_;
};

// Operation invoked on an object in an unusable state (e.g. missing
// boundary ring data).
class StateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Non-finite values or other fatal numeric breakdown. Not recoverable.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what, int node_i = -1, int node_j = -1)
        : std::runtime_error(what), i_(node_i), j_(node_j) {}
    int node_i() const noexcept { return i_; }
    int node_j() const noexcept { return j_; }

private:
    int i_, j_;
};

// Initial data failed validation during ingestion.
class IngestionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed file; `offset` is the byte position where parsing failed.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& what, long offset = -1)
        : std::runtime_error(what), offset_(offset) {}
    long offset() const noexcept { return offset_; }

private:
    long offset_;
};

// Recoverable: a proposed time step would destroy convexity. The caller
// is expected to halve dt and retry.
class StepRejected : public std::runtime_error {
public:
    StepRejected(const std::string& what, int node_i, int node_j, double min_kappa)
        : std::runtime_error(what), i_(node_i), j_(node_j), min_kappa_(min_kappa) {}
    int node_i() const noexcept { return i_; }
    int node_j() const noexcept { return j_; }
    double min_kappa() const noexcept { return min_kappa_; }

private:
    int i_, j_;
    double min_kappa_;
};

// Tangent-barrier construction could not certify one-sidedness.
class BarrierError : public std::runtime_error {
public:
    BarrierError(const std::string& what, double max_violation)
        : std::runtime_error(what), max_violation_(max_violation) {}
    double max_violation() const noexcept { return max_violation_; }

private:
    double max_violation_;
};

} // namespace mkflow
