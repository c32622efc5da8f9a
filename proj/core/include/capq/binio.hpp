/** \file
 * Little-endian binary container primitives.
 *
 * Every on-disk format in this project is built from these helpers.  Readers
 * carry the current byte offset into error messages so a truncated or corrupt
 * file reports where decoding stopped.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace capq {

class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v);
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f32(float v);
    void f64(double v);
    void bytes(std::span<const std::uint8_t> data);
    void magic(const char (&tag)[5]);

    void u32_array(std::span<const std::uint32_t> v);
    void u64_array(std::span<const std::uint64_t> v);
    void f32_array(std::span<const float> v);

    const std::vector<std::uint8_t>& data() const noexcept { return buf_; }
    std::size_t size() const noexcept { return buf_.size(); }

    void save(const std::filesystem::path& path) const;

private:
    std::vector<std::uint8_t> buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data, std::string source = "buffer")
        : data_(data), source_(std::move(source)) {}

    std::uint8_t u8();
    std::uint16_t u16();
    std::uint32_t u32();
    std::uint64_t u64();
    float f32();
    double f64();
    void bytes(std::span<std::uint8_t> out);
    /// Consumes 4 bytes and checks them against the expected container tag.
    void expect_magic(const char (&tag)[5]);

    void u32_array(std::span<std::uint32_t> out);
    void u64_array(std::span<std::uint64_t> out);
    void f32_array(std::span<float> out);

    std::size_t offset() const noexcept { return off_; }
    std::size_t remaining() const noexcept { return data_.size() - off_; }
    bool at_end() const noexcept { return off_ == data_.size(); }
    /// Fails with a data error unless the whole input was consumed.
    void expect_end();

    [[noreturn]] void fail(const std::string& what) const;

private:
    void need(std::size_t n);

    std::span<const std::uint8_t> data_;
    std::size_t off_ = 0;
    std::string source_;
};

std::vector<std::uint8_t> load_file(const std::filesystem::path& path);

}  // namespace capq
