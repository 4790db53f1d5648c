#include "rfimp/digest.hpp"

#include <openssl/evp.h>

#include "rfimp/error.hpp"

namespace rfimp {

Digest sha256(std::string_view data) {
    Digest out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != out.size())
        fail(ErrorKind::io, "sha256 failed");
    return out;
}

std::string to_hex(const Digest& d) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string s;
    s.reserve(2 * d.size());
    for (std::uint8_t b : d) {
        s.push_back(kHex[b >> 4]);
        s.push_back(kHex[b & 0xf]);
    }
    return s;
}

Digest digest_from_hex(std::string_view hex) {
    require(hex.size() == 64, ErrorKind::invalid_argument, "digest must be 64 hex characters");
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        fail(ErrorKind::invalid_argument, "digest contains a non-hex character");
    };
    Digest d{};
    for (std::size_t i = 0; i < d.size(); ++i)
        d[i] = static_cast<std::uint8_t>((nibble(hex[2 * i]) << 4) | nibble(hex[2 * i + 1]));
    return d;
}

}  // namespace rfimp
