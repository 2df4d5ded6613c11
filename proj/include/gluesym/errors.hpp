#pragma once

#include <stdexcept>
#include <string>

namespace gluesym {

// Base class for every error raised by the library. kind() returns the
// stable error name used in reports and CLI output.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define GLUESYM_DECLARE_ERROR(Name)                                   \
    class Name : public Error {                                       \
    public:                                                           \
        explicit Name(const std::string& what) : Error(#Name, what) {} \
    }

GLUESYM_DECLARE_ERROR(SchemaError);
GLUESYM_DECLARE_ERROR(PairingError);
GLUESYM_DECLARE_ERROR(OrientationError);
GLUESYM_DECLARE_ERROR(NonAbelianSmallBoundary);
GLUESYM_DECLARE_ERROR(InternalInconsistency);
GLUESYM_DECLARE_ERROR(NotAdjacent);
GLUESYM_DECLARE_ERROR(NotIsotropic);
GLUESYM_DECLARE_ERROR(BasisMismatch);
GLUESYM_DECLARE_ERROR(VerificationFailure);
GLUESYM_DECLARE_ERROR(NotATorus);
GLUESYM_DECLARE_ERROR(DegenerateConfiguration);
GLUESYM_DECLARE_ERROR(UnipotentAnnulus);
GLUESYM_DECLARE_ERROR(UnipotentTorus);
GLUESYM_DECLARE_ERROR(MomentMapViolation);
GLUESYM_DECLARE_ERROR(SingularForm);
GLUESYM_DECLARE_ERROR(NumericFailure);
GLUESYM_DECLARE_ERROR(DegenerateShape);
GLUESYM_DECLARE_ERROR(DomainError);

#undef GLUESYM_DECLARE_ERROR

}  // namespace gluesym
