#pragma once

#include <stdexcept>
#include <string>

namespace cen {

// Base for everything thrown by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad arguments: shape mismatches, non-finite inputs, out-of-range indices.
struct InvalidInput : Error {
    using Error::Error;
};

// Training produced a non-finite loss.
struct DivergedTraining : Error {
    using Error::Error;
};

// Metric is undefined for the given inputs (e.g. single-class AUC).
struct UndefinedMetric : Error {
    using Error::Error;
};

// CSV / schema problems; carries the offending row where known.
struct IngestionError : Error {
    using Error::Error;
};

// Weighted ridge with zero regularization hit a singular system.
struct SingularFit : Error {
    using Error::Error;
};

struct UnimplementedFeature : Error {
    using Error::Error;
};

}  // namespace cen
