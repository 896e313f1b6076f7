#pragma once

#include <stdexcept>
#include <string>

namespace moptn {

// Every failure the library reports derives from Error, so callers can
// catch one type at the CLI boundary.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define MOPTN_DEFINE_ERROR(Name)                  \
    class Name : public Error {                   \
    public:                                       \
        using Error::Error;                       \
    }

MOPTN_DEFINE_ERROR(InvalidParameter);
MOPTN_DEFINE_ERROR(SeriesTooShort);
MOPTN_DEFINE_ERROR(NonFiniteValue);
MOPTN_DEFINE_ERROR(LagTooLarge);
MOPTN_DEFINE_ERROR(DegenerateSample);
MOPTN_DEFINE_ERROR(InvalidLambda);
MOPTN_DEFINE_ERROR(ConditioningTooLarge);
MOPTN_DEFINE_ERROR(CandidateNotALink);
MOPTN_DEFINE_ERROR(ParameterUnset);
MOPTN_DEFINE_ERROR(NonFiniteState);
MOPTN_DEFINE_ERROR(ChannelMismatch);
MOPTN_DEFINE_ERROR(WindowTooShort);
MOPTN_DEFINE_ERROR(FormatError);

#undef MOPTN_DEFINE_ERROR

inline void require(bool ok, const std::string& what)
{
    if (!ok) throw InvalidParameter(what);
}

}  // namespace moptn
