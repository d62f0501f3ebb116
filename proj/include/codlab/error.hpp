#pragma once

#include <stdexcept>
#include <string>

namespace codlab {

// All library failures carry a machine-readable kind ("ShapeMismatch",
// "ZeroNorm", ...) next to the human-readable message. The CLI prints the
// kind as part of its diagnostic prefix; tests match on it.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& msg)
        : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}

    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

[[noreturn]] inline void fail(std::string kind, const std::string& msg) {
    throw Error(std::move(kind), msg);
}

inline void check(bool cond, const char* kind, const std::string& msg) {
    if (!cond) throw Error(kind, msg);
}

} // namespace codlab
