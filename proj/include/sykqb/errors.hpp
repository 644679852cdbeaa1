#pragma once

#include <stdexcept>

namespace sykqb {

/// Base class for every error thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IndexOutOfRange : Error { using Error::Error; };
struct NotHermitian : Error { using Error::Error; };
struct ConvergenceFailure : Error { using Error::Error; };
struct DimensionTooLarge : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct TooFewSamples : Error { using Error::Error; };
struct SiteOutOfRange : Error { using Error::Error; };
struct SizeTooLarge : Error { using Error::Error; };
struct SizeTooSmall : Error { using Error::Error; };
struct ZeroBandwidth : Error { using Error::Error; };
struct MaxAtBoundary : Error { using Error::Error; };
struct NotNormalized : Error { using Error::Error; };
struct ZeroEnergy : Error { using Error::Error; };
struct OverlapVanished : Error { using Error::Error; };
struct WindowTooSparse : Error { using Error::Error; };
struct NoGrowth : Error { using Error::Error; };
struct NonpositiveLambda : Error { using Error::Error; };
struct RankDeficient : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };
struct FillInOverflow : Error { using Error::Error; };
struct MissingResults : Error { using Error::Error; };

}  // namespace sykqb
