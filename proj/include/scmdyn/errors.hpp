#pragma once

#include <stdexcept>
#include <string>

namespace scmdyn {

#define SCMDYN_ERROR(Name)                                  \
  struct Name : std::runtime_error {                        \
    explicit Name(const std::string& what)                  \
        : std::runtime_error(std::string(#Name ": ") + what) {} \
  }

SCMDYN_ERROR(CycleError);
SCMDYN_ERROR(DanglingParentError);
SCMDYN_ERROR(PlateMismatchError);
SCMDYN_ERROR(InvalidPriorError);
SCMDYN_ERROR(IncompleteExogenousError);
SCMDYN_ERROR(EquationDomainError);
SCMDYN_ERROR(InsufficientSamplesError);
SCMDYN_ERROR(UnknownNodeError);
SCMDYN_ERROR(KindMismatchError);
SCMDYN_ERROR(ConflictError);
SCMDYN_ERROR(InconsistentObservationError);
SCMDYN_ERROR(EmptyDatasetError);
SCMDYN_ERROR(UnsupportedActionError);
SCMDYN_ERROR(AllWorldsInconsistentError);
SCMDYN_ERROR(InfeasibleConstraintError);
SCMDYN_ERROR(InvalidParamsError);
SCMDYN_ERROR(ConfigSchemaError);
SCMDYN_ERROR(DensityUnavailableError);

#undef SCMDYN_ERROR

}  // namespace scmdyn
