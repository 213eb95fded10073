#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace burrsim {

// Every failure the library reports is an Error carrying one of these kinds.
// The CLI maps each kind onto a distinct exit code (see cli_exit_code).
enum class ErrorKind {
    Parse,
    Unsupported,
    Truncated,
    Conflict,
    Io,
    Usage,
    Contract,
    State,
    Ordering,
    Corruption,
    Incomplete,
    WrongAnatomy,
    DegenerateNormal,
    Validation,
    InsufficientData,
    Framing,
    Network,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, const std::string& what)
{
    if (!condition) {
        throw Error(ErrorKind::Contract, what);
    }
}

} // namespace burrsim
