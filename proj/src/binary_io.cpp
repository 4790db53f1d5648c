#include "rfimp/binary_io.hpp"

#include <fstream>
#include <iterator>

#include "rfimp/error.hpp"

namespace rfimp {

void ByteWriter::f32_array(std::span<const float> v) {
    const std::size_t at = buf_.size();
    buf_.resize(at + 4 * v.size());
    std::uint8_t* out = buf_.data() + at;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto bits = std::bit_cast<std::uint32_t>(v[i]);
        out[4 * i + 0] = static_cast<std::uint8_t>(bits);
        out[4 * i + 1] = static_cast<std::uint8_t>(bits >> 8);
        out[4 * i + 2] = static_cast<std::uint8_t>(bits >> 16);
        out[4 * i + 3] = static_cast<std::uint8_t>(bits >> 24);
    }
}

void ByteReader::need(std::size_t n) const {
    if (n > data_.size() - pos_)
        fail(ErrorKind::truncated, context_ + ": unexpected end of data at byte " + std::to_string(pos_) +
                                       " (need " + std::to_string(n) + " more)");
}

std::uint64_t ByteReader::get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{data_[pos_ + static_cast<std::size_t>(i)]} << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
}

std::uint8_t ByteReader::u8() {
    need(1);
    return data_[pos_++];
}

std::span<const std::uint8_t> ByteReader::bytes(std::size_t n) {
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
}

void ByteReader::f32_array(std::span<float> out) {
    need(4 * out.size());
    const std::uint8_t* in = data_.data() + pos_;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::uint32_t bits = std::uint32_t{in[4 * i]} | (std::uint32_t{in[4 * i + 1]} << 8) |
                                   (std::uint32_t{in[4 * i + 2]} << 16) |
                                   (std::uint32_t{in[4 * i + 3]} << 24);
        out[i] = std::bit_cast<float>(bits);
    }
    pos_ += 4 * out.size();
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open '" + path.string() + "' for reading");
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) fail(ErrorKind::io, "read error on '" + path.string() + "'");
    return data;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::io, "cannot open '" + tmp.string() + "' for writing");
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) fail(ErrorKind::io, "write error on '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) fail(ErrorKind::io, "cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace rfimp
