#pragma once

#include <stdexcept>
#include <string>

namespace lpdepth {

// Process exit status a CLI should use when an error escapes to the top level.
enum class ErrorKind : int {
    Usage = 2,    // bad arguments, missing columns, dimension mismatch
    Data = 3,     // unparsable or insufficient input
    Numeric = 4,  // degenerate fits, singularities
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }
    int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

struct DomainError : Error {
    explicit DomainError(const std::string& w) : Error(ErrorKind::Usage, w) {}
};

struct DimensionMismatch : Error {
    explicit DimensionMismatch(const std::string& w) : Error(ErrorKind::Usage, w) {}
};

struct UnsupportedDimension : Error {
    explicit UnsupportedDimension(const std::string& w) : Error(ErrorKind::Usage, w) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error(ErrorKind::Usage, w) {}
};

struct ParseError : Error {
    explicit ParseError(const std::string& w) : Error(ErrorKind::Data, w) {}
};

struct InsufficientData : Error {
    explicit InsufficientData(const std::string& w) : Error(ErrorKind::Data, w) {}
};

struct FormatVersionError : Error {
    explicit FormatVersionError(const std::string& w) : Error(ErrorKind::Data, w) {}
};

struct DegenerateData : Error {
    explicit DegenerateData(const std::string& w) : Error(ErrorKind::Numeric, w) {}
};

struct DegenerateGeometry : Error {
    explicit DegenerateGeometry(const std::string& w) : Error(ErrorKind::Numeric, w) {}
};

struct SingularityError : Error {
    explicit SingularityError(const std::string& w) : Error(ErrorKind::Numeric, w) {}
};

struct TrimTooAggressive : Error {
    explicit TrimTooAggressive(const std::string& w) : Error(ErrorKind::Numeric, w) {}
};

struct UndefinedRegret : Error {
    explicit UndefinedRegret(const std::string& w) : Error(ErrorKind::Numeric, w) {}
};

}  // namespace lpdepth
