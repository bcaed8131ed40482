#pragma once

#include <stdexcept>
#include <string>

namespace gram {

// Base for every error raised by the library. Callers that only need to
// report a failure can catch this; tests and the CLI dispatch on the
// concrete subclasses below.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define GRAM_DEFINE_ERROR(Name)                  \
  class Name : public Error {                    \
   public:                                       \
    explicit Name(const std::string& what)       \
        : Error(std::string(#Name ": ") + what) {} \
  }

GRAM_DEFINE_ERROR(ZeroVector);
GRAM_DEFINE_ERROR(DimensionMismatch);
GRAM_DEFINE_ERROR(EmptyInput);
GRAM_DEFINE_ERROR(NonFiniteInput);
GRAM_DEFINE_ERROR(SingularGram);
GRAM_DEFINE_ERROR(InconsistentBatch);
GRAM_DEFINE_ERROR(NonFiniteLoss);
GRAM_DEFINE_ERROR(BatchTooSmall);
GRAM_DEFINE_ERROR(InvalidSpec);
GRAM_DEFINE_ERROR(DivergedTraining);
GRAM_DEFINE_ERROR(NonSquare);
GRAM_DEFINE_ERROR(DegenerateVariance);

#undef GRAM_DEFINE_ERROR

}  // namespace gram
