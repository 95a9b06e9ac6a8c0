#pragma once

#include <cstdarg>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace evodiff {

/// Thrown when a constructor or setter receives arguments that violate a
/// documented precondition (non-positive scale, wrong vector length, ...).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when a query leaves the admissible range of an object
/// (time outside a growth-law horizon, point outside the current domain, ...).
class RangeError : public std::out_of_range {
public:
    explicit RangeError(const std::string& what) : std::out_of_range(what) {}
};

/// Thrown when evaluating a user expression fails (unknown symbol at bind
/// time, non-finite result, division blow-up at a sample point, ...).
class EvalError : public std::runtime_error {
public:
    explicit EvalError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when a numerical routine cannot proceed (singular system,
/// iteration failed to converge, non-finite state outside a monitored run).
class NumericsError : public std::runtime_error {
public:
    explicit NumericsError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown by config parsing/validation.  Collects *all* diagnostics so the
/// user sees every problem in one pass, not just the first.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> messages)
        : std::runtime_error(join(messages)), messages_(std::move(messages)) {}
    const std::vector<std::string>& messages() const { return messages_; }

private:
    static std::string join(const std::vector<std::string>& msgs) {
        std::string all;
        for (const auto& m : msgs) {
            if (!all.empty()) all += "\n";
            all += m;
        }
        return all;
    }
    std::vector<std::string> messages_;
};

/// Thrown on file I/O failures (missing snapshot, malformed header, ...).
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// printf-style formatting into a std::string; used for error messages.
inline std::string strfmt(const char* fmt, ...) {
    va_list args;
    va_start(args, fmt);
    va_list copy;
    va_copy(copy, args);
    const int n = std::vsnprintf(nullptr, 0, fmt, copy);
    va_end(copy);
    std::string out(n > 0 ? static_cast<size_t>(n) : 0, '\0');
    if (n > 0) std::vsnprintf(out.data(), out.size() + 1, fmt, args);
    va_end(args);
    return out;
}

inline constexpr const char* kVersion = "0.1.0";

} // namespace evodiff
