#ifndef EQADAPT_ERRORS_HPP
#define EQADAPT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace eqadapt
{

enum class ErrorKind {
    Dimension,
    RankDeficient,
    InfeasibleInitialEstimate,
    Diverged,
    MissingFE,
    Parse,
    Validation,
    Io,
};

inline const char *to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::Dimension:
        return "DimensionError";
    case ErrorKind::RankDeficient:
        return "RankDeficient";
    case ErrorKind::InfeasibleInitialEstimate:
        return "InfeasibleInitialEstimate";
    case ErrorKind::Diverged:
        return "Diverged";
    case ErrorKind::MissingFE:
        return "MissingFE";
    case ErrorKind::Parse:
        return "ParseError";
    case ErrorKind::Validation:
        return "ValidationError";
    case ErrorKind::Io:
        return "IoError";
    }
    return "Error";
}

/// Every failure raised by the library carries one of the kinds above so
/// front ends can map it to an exit code without string matching.
class Error : public std::runtime_error
{
public:
    Error(ErrorKind kind, const std::string &what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

namespace detail
{

inline void require_dim(bool ok, const std::string &what)
{
    if (!ok) {
        throw Error(ErrorKind::Dimension, what);
    }
}

} // namespace detail

} // namespace eqadapt

#endif
