#include "rfimp/error.hpp"

namespace rfimp {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::invalid_argument: return "invalid argument";
        case ErrorKind::out_of_range: return "out of range";
        case ErrorKind::sync_not_found: return "sync not found";
        case ErrorKind::io: return "i/o error";
        case ErrorKind::bad_magic: return "bad magic";
        case ErrorKind::version_mismatch: return "version mismatch";
        case ErrorKind::truncated: return "truncated";
        case ErrorKind::digest_mismatch: return "digest mismatch";
        case ErrorKind::shape_mismatch: return "shape mismatch";
        case ErrorKind::config: return "config error";
    }
    return "unknown";
}

}  // namespace rfimp
