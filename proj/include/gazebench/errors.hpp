#pragma once

#include <stdexcept>
#include <string>

namespace gazebench {

// Base of every error the library raises. Callers that only care about
// "something in the pipeline failed" can catch this one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define GAZEBENCH_DEFINE_ERROR(Name)                                        \
    class Name : public Error {                                             \
    public:                                                                 \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
    }

GAZEBENCH_DEFINE_ERROR(BehindCamera);
GAZEBENCH_DEFINE_ERROR(ConfigInvalid);
GAZEBENCH_DEFINE_ERROR(MarkerOverflow);
GAZEBENCH_DEFINE_ERROR(NoOverlap);
GAZEBENCH_DEFINE_ERROR(AmbiguousSync);
GAZEBENCH_DEFINE_ERROR(ClipTooShort);
GAZEBENCH_DEFINE_ERROR(ShapeMismatch);
GAZEBENCH_DEFINE_ERROR(NotARotation);
GAZEBENCH_DEFINE_ERROR(NonFiniteGradient);
GAZEBENCH_DEFINE_ERROR(DatasetEmpty);
GAZEBENCH_DEFINE_ERROR(PairMismatch);
GAZEBENCH_DEFINE_ERROR(CorruptCheckpoint);
GAZEBENCH_DEFINE_ERROR(EmptyEvalSet);
GAZEBENCH_DEFINE_ERROR(NoSessions);
GAZEBENCH_DEFINE_ERROR(FormatError);

#undef GAZEBENCH_DEFINE_ERROR

} // namespace gazebench
