#include "gazebench/errors.hpp"
#include "gazebench/tensor_io.hpp"

#include "doctest.h"

#include <sstream>

using namespace gazebench;
using namespace gazebench::tensor_io;

namespace {

std::string encode(const Blob& b) {
    std::ostringstream out(std::ios::binary);
    write(out, b);
    return out.str();
}

Blob decode(const std::string& s) {
    std::istringstream in(s, std::ios::binary);
    return read(in);
}

} // namespace

TEST_CASE("u8 tensor header layout is little-endian") {
    const std::vector<std::uint8_t> values = {1, 2, 3, 4, 5, 6};
    const auto bytes = encode(Blob::from_u8({2, 3}, values));
    const std::string expect_header = std::string("GZTN") + std::string("\x01\x00\x00\x00", 4) +
                                      std::string("\x02\x00\x00\x00", 4) + std::string("\x02\x00\x00\x00", 4) +
                                      std::string("\x03\x00\x00\x00", 4) + std::string("\x00", 1);
    REQUIRE(bytes.size() == expect_header.size() + 6);
    CHECK(bytes.substr(0, expect_header.size()) == expect_header);
    CHECK(bytes.substr(expect_header.size()) == std::string("\x01\x02\x03\x04\x05\x06", 6));
}

TEST_CASE("f32 payload encodes IEEE bits little-endian") {
    const std::vector<float> values = {1.0f};
    const auto bytes = encode(Blob::from_f32({1}, values));
    CHECK(bytes.substr(bytes.size() - 4) == std::string("\x00\x00\x80\x3f", 4));
}

TEST_CASE("round trips for every dtype") {
    const std::vector<std::uint8_t> u8 = {0, 127, 255, 9};
    const std::vector<float> f32 = {-1.5f, 0.0f, 3.25f, 1e-20f};
    const std::vector<double> f64 = {-1.5, 1.0 / 3.0, 1e300, -0.0};
    CHECK(decode(encode(Blob::from_u8({2, 2}, u8))).as_u8() == u8);
    CHECK(decode(encode(Blob::from_f32({4}, f32))).as_f32() == f32);
    const auto back = decode(encode(Blob::from_f64({1, 2, 2}, f64)));
    CHECK(back.dims == std::vector<std::uint32_t>{1, 2, 2});
    CHECK(back.as_f64() == f64);
}

TEST_CASE("tensor conversion keeps shape and values") {
    Tensor t({2, 3});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.1 * static_cast<double>(i);
    const auto back = decode(encode(Blob::from_tensor(t))).to_tensor();
    CHECK(back == t);
}

TEST_CASE("bad magic, version, dtype and truncation are rejected") {
    const std::vector<std::uint8_t> values = {1, 2, 3, 4};
    const auto good = encode(Blob::from_u8({4}, values));
    std::string bad = good;
    bad[0] = 'X';
    CHECK_THROWS_AS(decode(bad), FormatError);
    bad = good;
    bad[4] = 2;
    CHECK_THROWS_AS(decode(bad), FormatError);
    bad = good;
    bad[16] = 9;
    CHECK_THROWS_AS(decode(bad), FormatError);
    CHECK_THROWS_AS(decode(good.substr(0, good.size() - 1)), FormatError);
    CHECK_THROWS_AS(decode(good.substr(0, 10)), FormatError);
}

TEST_CASE("element count must match the payload") {
    const std::vector<std::uint8_t> values = {1, 2, 3};
    CHECK_THROWS(Blob::from_u8({2, 2}, values));
}
