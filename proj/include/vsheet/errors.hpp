#pragma once

#include <stdexcept>
#include <string>

namespace vsheet {

/// Base for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// min|eta'| fell below 1e-10 of its mean; tangential derivatives undefined.
struct DegenerateMetric : Error {
    using Error::Error;
};

/// Two non-adjacent interface nodes closer than 0.1 local grid spacings.
/// Signals splash proximity; a scientific outcome, not a crash.
struct NearSingularKernel : Error {
    using Error::Error;
};

/// A field exceeded 1e6 times its scale at step entry.
struct UnstableStep : Error {
    using Error::Error;
};

/// Off-interface evaluation requested closer than 2 grid spacings to the curve.
struct PointTooClose : Error {
    using Error::Error;
};

/// Vertical line misses the requested window's horizontal span.
struct NoIntersection : Error {
    using Error::Error;
};

/// Window tangent violates the cone bound; the vertical line may cross it
/// more than once.
struct NonMonotone : Error {
    using Error::Error;
};

/// Vertical probe segment leaves the minus phase.
struct SegmentExitsPhase : Error {
    using Error::Error;
};

/// Tracked pair separation below 1e-12 of the curve scale.
struct DegeneratePair : Error {
    using Error::Error;
};

/// Too few samples in the blow-up regime to fit or verify anything.
struct InsufficientWindow : Error {
    using Error::Error;
};

/// A marker vertex crossed the interface.
struct MarkerEscaped : Error {
    using Error::Error;
};

/// Run directory has no readable manifest.
struct MissingManifest : Error {
    using Error::Error;
};

/// Scenario or family file failed to parse.
struct ParseError : Error {
    using Error::Error;
};

} // namespace vsheet
