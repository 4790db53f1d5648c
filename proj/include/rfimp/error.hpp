#pragma once

#include <stdexcept>
#include <string>

namespace rfimp {

enum class ErrorKind {
    invalid_argument,
    out_of_range,
    sync_not_found,
    io,
    bad_magic,
    version_mismatch,
    truncated,
    digest_mismatch,
    shape_mismatch,
    config,
};

const char* to_string(ErrorKind kind) noexcept;

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
    if (!cond) fail(kind, what);
}

}  // namespace rfimp
