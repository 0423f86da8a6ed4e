#ifndef ELAA_ERRORS_HPP
#define ELAA_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace elaa {

enum class ErrorKind {
    InvalidArgument,
    CoincidentTarget,
    UnderResolved,
    IllConditioned,
    SingularPairing,
    AmbiguousDealias,
    ParallelBearings,
    BehindArray,
};

constexpr std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::CoincidentTarget: return "CoincidentTarget";
    case ErrorKind::UnderResolved: return "UnderResolved";
    case ErrorKind::IllConditioned: return "IllConditioned";
    case ErrorKind::SingularPairing: return "SingularPairing";
    case ErrorKind::AmbiguousDealias: return "AmbiguousDealias";
    case ErrorKind::ParallelBearings: return "ParallelBearings";
    case ErrorKind::BehindArray: return "BehindArray";
    }
    return "Unknown";
}

/// Raised by the estimators. The harness turns every such error into a
/// per-trial failure instead of aborting the run.
class EstimationError : public std::runtime_error {
public:
    EstimationError(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Scenario or command-line configuration problem. `line` is 0 when the
/// error is not tied to a line of a scenario file.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message, int line = 0)
        : std::runtime_error(format(field, message, line)), field_(std::move(field)), message_(message),
          line_(line)
    {
    }

    const std::string& field() const noexcept { return field_; }
    const std::string& message() const noexcept { return message_; }
    int line() const noexcept { return line_; }

private:
    static std::string format(const std::string& field, const std::string& message, int line)
    {
        std::string out;
        if (line > 0)
            out += "line " + std::to_string(line) + ": ";
        if (!field.empty())
            out += "field '" + field + "': ";
        return out + message;
    }

    std::string field_;
    std::string message_;
    int line_;
};

} // namespace elaa

#endif
