#pragma once

#include <stdexcept>
#include <string>

namespace codistill {

// Everything thrown by the library derives from Error so callers can catch a
// single type at the process boundary and map it to an exit code.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dimension mismatches, bad axes, non-scalar loss.
struct ShapeError : Error {
    using Error::Error;
};

// Numeric-domain violations: log of a nonpositive value, division by zero,
// nonpositive temperature, invalid loss weights.
struct DomainError : Error {
    using Error::Error;
};

// Bad labels, indices, sample sizes, degenerate inputs.
struct ValueError : Error {
    using Error::Error;
};

// backward() from a tensor that is not on the active tape.
struct TapeError : Error {
    using Error::Error;
};

// Invalid DistillConfig, network spec, or experiment spec.
struct ConfigError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// CSV / config-file text that does not parse; message names the line.
struct ParseError : Error {
    using Error::Error;
};

// A training loss went non-finite. Carries which model and which batch so a
// harness can report the offending run instead of silently clipping.
struct DivergenceError : Error {
    std::string model;
    long batch;
    DivergenceError(std::string model_id, long batch_index, const std::string& what)
        : Error(what), model(std::move(model_id)), batch(batch_index) {}
};

}  // namespace codistill
