#ifndef MAXPOLY_ERROR_HPP_
#define MAXPOLY_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace maxpoly {

// Base of every domain error thrown by the library. kind() is the stable
// machine-readable name surfaced by the CLI and HTTP layers.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& message) : std::runtime_error(message) {}
    virtual const char* kind() const noexcept { return "Error"; }
};

#define MAXPOLY_DEFINE_ERROR(Name, Base)                                    \
    class Name : public Base {                                              \
    public:                                                                 \
        explicit Name(const std::string& message) : Base(message) {}        \
        const char* kind() const noexcept override { return #Name; }        \
    };

MAXPOLY_DEFINE_ERROR(ParseError, Error)
MAXPOLY_DEFINE_ERROR(ShapeError, Error)
MAXPOLY_DEFINE_ERROR(RangeError, Error)
MAXPOLY_DEFINE_ERROR(EmptyBeatError, Error)
MAXPOLY_DEFINE_ERROR(ResolutionError, Error)
MAXPOLY_DEFINE_ERROR(ScopeError, Error)
MAXPOLY_DEFINE_ERROR(ZeroFeatureError, Error)
MAXPOLY_DEFINE_ERROR(TooLargeError, Error)
MAXPOLY_DEFINE_ERROR(VersionError, Error)
MAXPOLY_DEFINE_ERROR(ValidationError, Error)
MAXPOLY_DEFINE_ERROR(EmptyDatasetError, Error)
MAXPOLY_DEFINE_ERROR(DivergenceError, Error)
MAXPOLY_DEFINE_ERROR(ConfigError, Error)
MAXPOLY_DEFINE_ERROR(ConstraintError, ConfigError)
MAXPOLY_DEFINE_ERROR(FullyPinnedError, Error)
MAXPOLY_DEFINE_ERROR(EmptyReferenceError, Error)
MAXPOLY_DEFINE_ERROR(MissingModelError, Error)
MAXPOLY_DEFINE_ERROR(AlphabetError, Error)

#undef MAXPOLY_DEFINE_ERROR

}  // namespace maxpoly

#endif  // MAXPOLY_ERROR_HPP_
