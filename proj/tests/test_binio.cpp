#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "capq/binio.hpp"
#include "capq/error.hpp"

using namespace capq;

TEST_CASE("writer and reader round-trip every scalar type") {
    ByteWriter w;
    w.magic("TEST");
    w.u8(0xAB);
    w.u16(0xBEEF);
    w.u32(0xDEADBEEF);
    w.u64(0x0123456789ABCDEFull);
    w.f32(1.5f);
    w.f64(-2.25);

    ByteReader r(w.data());
    r.expect_magic("TEST");
    CHECK(r.u8() == 0xAB);
    CHECK(r.u16() == 0xBEEF);
    CHECK(r.u32() == 0xDEADBEEF);
    CHECK(r.u64() == 0x0123456789ABCDEFull);
    CHECK(r.f32() == 1.5f);
    CHECK(r.f64() == -2.25);
    r.expect_end();
}

TEST_CASE("array helpers round-trip") {
    ByteWriter w;
    std::vector<std::uint32_t> u{1, 2, 3, 0xFFFFFFFF};
    std::vector<float> f{0.0f, -1.0f, 3.25f};
    w.u32_array(u);
    w.f32_array(f);
    ByteReader r(w.data());
    std::vector<std::uint32_t> ru(4);
    std::vector<float> rf(3);
    r.u32_array(ru);
    r.f32_array(rf);
    CHECK(ru == u);
    CHECK(rf == f);
    r.expect_end();
}

TEST_CASE("magic mismatch names the byte offset") {
    ByteWriter w;
    w.magic("GOOD");
    ByteReader r(w.data());
    try {
        r.expect_magic("EVIL");
        FAIL("expected a data error");
    } catch (const Error& e) {
        CHECK(e.code() == errc::bad_data);
        CHECK(std::string(e.what()).find("offset 0") != std::string::npos);
    }
}

TEST_CASE("truncated input names the offset where data ran out") {
    ByteWriter w;
    w.u32(7);
    ByteReader r(w.data());
    CHECK(r.u32() == 7);
    try {
        r.u64();
        FAIL("expected a data error");
    } catch (const Error& e) {
        CHECK(e.code() == errc::bad_data);
        CHECK(std::string(e.what()).find("offset 4") != std::string::npos);
    }
}

TEST_CASE("trailing bytes are rejected") {
    ByteWriter w;
    w.u8(1);
    w.u8(2);
    ByteReader r(w.data());
    r.u8();
    CHECK_THROWS_AS(r.expect_end(), Error);
}

TEST_CASE("files round-trip through save and load") {
    auto path = std::filesystem::temp_directory_path() / "capq_binio_test.bin";
    ByteWriter w;
    w.magic("FILE");
    w.u64(99);
    w.save(path);
    auto bytes = load_file(path);
    CHECK(bytes == w.data());
    std::filesystem::remove(path);
}

TEST_CASE("missing file is a data error") {
    CHECK_THROWS_AS(load_file("/nonexistent/capq/nope.bin"), Error);
}
