#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "amlb/error.hpp"

namespace amlb {

using Bytes = std::vector<uint8_t>;

// Big-endian append/read helpers shared by the weight and chain codecs.
class ByteWriter {
  public:
    void u8(uint8_t v) { buf_.push_back(v); }
    void u16(uint16_t v) {
        buf_.push_back(uint8_t(v >> 8));
        buf_.push_back(uint8_t(v));
    }
    void u32(uint32_t v) {
        for (int s = 24; s >= 0; s -= 8) buf_.push_back(uint8_t(v >> s));
    }
    void u64(uint64_t v) {
        for (int s = 56; s >= 0; s -= 8) buf_.push_back(uint8_t(v >> s));
    }
    void f64(double v) {
        uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        u64(bits);
    }
    void raw(std::span<const uint8_t> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }
    void raw(const char* s) { raw(std::span(reinterpret_cast<const uint8_t*>(s), std::strlen(s))); }

    const Bytes& bytes() const { return buf_; }
    Bytes take() { return std::move(buf_); }

  private:
    Bytes buf_;
};

// Bounds-checked cursor; every overrun throws CodecError.
class ByteReader {
  public:
    explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

    uint8_t u8() { return take(1)[0]; }
    uint16_t u16() {
        auto b = take(2);
        return uint16_t(b[0]) << 8 | b[1];
    }
    uint32_t u32() {
        auto b = take(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = v << 8 | b[i];
        return v;
    }
    uint64_t u64() {
        auto b = take(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v = v << 8 | b[i];
        return v;
    }
    double f64() {
        uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }
    std::span<const uint8_t> take(size_t n) {
        if (n > remaining()) throw CodecError("truncated input: need " + std::to_string(n) + " bytes, have " + std::to_string(remaining()));
        auto out = data_.subspan(pos_, n);
        pos_ += n;
        return out;
    }
    void expect(const char* magic) {
        size_t n = std::strlen(magic);
        auto b = take(n);
        if (std::memcmp(b.data(), magic, n) != 0) throw CodecError(std::string("bad magic, expected \"") + magic + "\"");
    }
    size_t remaining() const { return data_.size() - pos_; }
    size_t pos() const { return pos_; }
    void expect_end() const {
        if (remaining() != 0) throw CodecError(std::to_string(remaining()) + " trailing bytes");
    }

  private:
    std::span<const uint8_t> data_;
    size_t pos_ = 0;
};

}  // namespace amlb
