#pragma once

#include <stdexcept>
#include <string>

namespace bmcomp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define BMCOMP_DEFINE_ERROR(Name)          \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

// Window / codec synchronization.
BMCOMP_DEFINE_ERROR(PositionNotInWindow);
BMCOMP_DEFINE_ERROR(InconsistentBitmap);
BMCOMP_DEFINE_ERROR(Desynchronized);

// Wire parsing.
BMCOMP_DEFINE_ERROR(MalformedMessage);

// Diffusion model and limits.
BMCOMP_DEFINE_ERROR(InvalidParameters);
BMCOMP_DEFINE_ERROR(DegenerateCondition);
BMCOMP_DEFINE_ERROR(DomainError);
BMCOMP_DEFINE_ERROR(NoFeasibleCurve);

// Entropy layer.
BMCOMP_DEFINE_ERROR(ModelContradiction);
BMCOMP_DEFINE_ERROR(TruncatedBlock);

// Scenario / command-line configuration.
BMCOMP_DEFINE_ERROR(ConfigError);

#undef BMCOMP_DEFINE_ERROR

}  // namespace bmcomp
