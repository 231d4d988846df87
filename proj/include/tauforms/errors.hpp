#pragma once

#include <stdexcept>
#include <string>

namespace tauforms {

// Domain error with a stable machine-readable code (used by the CLI to build
// structured error output, exit code 1).
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& msg)
        : std::runtime_error(msg), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define TAUFORMS_DEFINE_ERROR(Name)                                  \
    class Name : public Error {                                      \
    public:                                                          \
        explicit Name(const std::string& msg) : Error(#Name, msg) {} \
    }

TAUFORMS_DEFINE_ERROR(NonPositiveDefinite);
TAUFORMS_DEFINE_ERROR(UnsupportedOrder);
TAUFORMS_DEFINE_ERROR(UnsupportedGenus);
TAUFORMS_DEFINE_ERROR(NoNonsingularOddChar);
TAUFORMS_DEFINE_ERROR(QuadratureFailure);
TAUFORMS_DEFINE_ERROR(IllConditioned);
TAUFORMS_DEFINE_ERROR(ChartFailure);
TAUFORMS_DEFINE_ERROR(SheetTrackingLoss);
TAUFORMS_DEFINE_ERROR(PoleCollision);
TAUFORMS_DEFINE_ERROR(ResidueSumNonzero);
TAUFORMS_DEFINE_ERROR(ZeroResidue);
TAUFORMS_DEFINE_ERROR(CountMismatch);
TAUFORMS_DEFINE_ERROR(NotASimpleZero);
TAUFORMS_DEFINE_ERROR(PathThroughDivisor);
TAUFORMS_DEFINE_ERROR(CoincidentPoints);
TAUFORMS_DEFINE_ERROR(HZero);
TAUFORMS_DEFINE_ERROR(WronskianZero);
TAUFORMS_DEFINE_ERROR(CZero);
TAUFORMS_DEFINE_ERROR(LatticeRoundingAmbiguous);
TAUFORMS_DEFINE_ERROR(DegenerateDivisor);
TAUFORMS_DEFINE_ERROR(BasepointOnDivisor);
TAUFORMS_DEFINE_ERROR(NotSymplectic);
TAUFORMS_DEFINE_ERROR(NoCollisionFound);
TAUFORMS_DEFINE_ERROR(CalibrationFailure);
TAUFORMS_DEFINE_ERROR(ResidueSplitInvalid);
TAUFORMS_DEFINE_ERROR(InsufficientSamples);
TAUFORMS_DEFINE_ERROR(AmbiguousZeroTest);
TAUFORMS_DEFINE_ERROR(WrongModuliSpace);
TAUFORMS_DEFINE_ERROR(InvalidResidues);
TAUFORMS_DEFINE_ERROR(DegenerateConfiguration);
TAUFORMS_DEFINE_ERROR(InvalidCurve);
TAUFORMS_DEFINE_ERROR(InvalidInput);

#undef TAUFORMS_DEFINE_ERROR

} // namespace tauforms
