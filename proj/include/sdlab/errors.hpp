#pragma once

#include <stdexcept>
#include <string>

namespace sdlab {

// Base class for everything this library throws on purpose. The CLI maps the
// concrete types to process exit codes, so new error kinds should subclass one
// of these rather than throwing std::runtime_error directly.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A scalar argument is outside its documented domain (t outside [0,1], negative
// sigma, bad schedule parameter, ...).
struct DomainError : Error {
    using Error::Error;
};

// Two latents (or a latent and a backend) disagree on shape.
struct ShapeError : Error {
    using Error::Error;
};

// Unknown label id, or a null condition where a concrete label is required.
struct ConditionError : Error {
    using Error::Error;
};

// Empty or malformed dataset / weights document.
struct DataError : Error {
    using Error::Error;
};

// A metric was asked to do something it does not support (wrong rank, image
// smaller than the window, ...).
struct MetricError : Error {
    using Error::Error;
};

// An iterative optimisation produced non-finite values or ran away. The message
// names the step that blew up.
struct DivergenceError : Error {
    using Error::Error;
};

// A replay (inversion) was handed a record that does not match its config.
struct ReplayError : Error {
    using Error::Error;
};

// Bad experiment config file (parse error, unknown key, wrong type, bad value).
struct ConfigError : Error {
    using Error::Error;
};

// Filesystem trouble: unreadable input, unwritable output directory.
struct IoError : Error {
    using Error::Error;
};

}  // namespace sdlab
