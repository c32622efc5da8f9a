#include "capq/binio.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "capq/error.hpp"

namespace capq {

void ByteWriter::u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f32(float v) {
    u32(std::bit_cast<std::uint32_t>(v));
}

void ByteWriter::f64(double v) {
    u64(std::bit_cast<std::uint64_t>(v));
}

void ByteWriter::bytes(std::span<const std::uint8_t> data) {
    buf_.insert(buf_.end(), data.begin(), data.end());
}

void ByteWriter::magic(const char (&tag)[5]) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(tag[i]));
}

void ByteWriter::u32_array(std::span<const std::uint32_t> v) {
    for (std::uint32_t x : v) u32(x);
}

void ByteWriter::u64_array(std::span<const std::uint64_t> v) {
    for (std::uint64_t x : v) u64(x);
}

void ByteWriter::f32_array(std::span<const float> v) {
    for (float x : v) f32(x);
}

void ByteWriter::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw_data("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(buf_.data()),
              static_cast<std::streamsize>(buf_.size()));
    if (!out) throw_data("short write to " + path.string());
}

void ByteReader::need(std::size_t n) {
    if (data_.size() - off_ < n) {
        fail("truncated: need " + std::to_string(n) + " more bytes");
    }
}

std::uint8_t ByteReader::u8() {
    need(1);
    return data_[off_++];
}

std::uint16_t ByteReader::u16() {
    need(2);
    std::uint16_t v = 0;
    for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(data_[off_ + i]) << (8 * i);
    off_ += 2;
    return v;
}

std::uint32_t ByteReader::u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[off_ + i]) << (8 * i);
    off_ += 4;
    return v;
}

std::uint64_t ByteReader::u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[off_ + i]) << (8 * i);
    off_ += 8;
    return v;
}

float ByteReader::f32() {
    return std::bit_cast<float>(u32());
}

double ByteReader::f64() {
    return std::bit_cast<double>(u64());
}

void ByteReader::bytes(std::span<std::uint8_t> out) {
    need(out.size());
    std::memcpy(out.data(), data_.data() + off_, out.size());
    off_ += out.size();
}

void ByteReader::expect_magic(const char (&tag)[5]) {
    std::size_t at = off_;
    need(4);
    bool ok = true;
    for (int i = 0; i < 4; ++i) {
        if (data_[off_ + i] != static_cast<std::uint8_t>(tag[i])) ok = false;
    }
    if (!ok) {
        off_ = at;
        fail(std::string("bad magic, expected '") + tag + "'");
    }
    off_ += 4;
}

void ByteReader::u32_array(std::span<std::uint32_t> out) {
    for (auto& x : out) x = u32();
}

void ByteReader::u64_array(std::span<std::uint64_t> out) {
    for (auto& x : out) x = u64();
}

void ByteReader::f32_array(std::span<float> out) {
    for (auto& x : out) x = f32();
}

void ByteReader::expect_end() {
    if (!at_end()) fail("trailing bytes after end of container");
}

void ByteReader::fail(const std::string& what) const {
    throw_data(source_ + ": " + what + " at byte offset " + std::to_string(off_));
}

std::vector<std::uint8_t> load_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw_data("cannot open " + path.string());
    std::streamsize size = in.tellg();
    in.seekg(0);
    std::vector<std::uint8_t> buf(static_cast<std::size_t>(size));
    if (size > 0) {
        in.read(reinterpret_cast<char*>(buf.data()), size);
        if (!in) throw_data("short read from " + path.string());
    }
    return buf;
}

}  // namespace capq
