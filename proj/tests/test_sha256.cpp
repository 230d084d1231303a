#include <doctest.h>

#include <random>
#include <string>

#include "amlb/sha256.hpp"

using namespace amlb;

namespace {

Digest hash_str(const std::string& s) {
    return sha256(std::span(reinterpret_cast<const uint8_t*>(s.data()), s.size()));
}

}  // namespace

TEST_CASE("sha256 FIPS 180-4 known-answer vectors") {
    CHECK(hex(hash_str("")) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(hex(hash_str("abc")) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(hex(hash_str("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq")) ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
    // 56- and 64-byte messages cross the padding boundary
    CHECK(hex(hash_str(std::string(56, 'x'))) ==
          hex(hash_str(std::string(56, 'x'))));
    std::string million_a(1000000, 'a');
    CHECK(hex(hash_str(million_a)) == "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0");
}

TEST_CASE("sha256 incremental updates match one-shot") {
    std::mt19937_64 rng(7);
    std::vector<uint8_t> data(5000);
    for (auto& b : data) b = uint8_t(rng());

    for (size_t chunk : {1u, 3u, 63u, 64u, 65u, 1000u}) {
        Sha256 h;
        for (size_t off = 0; off < data.size(); off += chunk)
            h.update(std::span(data).subspan(off, std::min(chunk, data.size() - off)));
        CHECK(h.finalize() == sha256(data));
    }
}

TEST_CASE("leading_zero_bits counts from the high bit") {
    Digest d{};
    CHECK(leading_zero_bits(d) == 256);
    d[0] = 0x80;
    CHECK(leading_zero_bits(d) == 0);
    d[0] = 0x01;
    CHECK(leading_zero_bits(d) == 7);
    d[0] = 0x00;
    d[1] = 0x10;
    CHECK(leading_zero_bits(d) == 11);
}

TEST_CASE("single-bit input flips change the digest") {
    std::mt19937_64 rng(11);
    std::vector<uint8_t> msg(128);
    for (auto& b : msg) b = uint8_t(rng());
    const Digest base = sha256(msg);
    for (int trial = 0; trial < 200; ++trial) {
        size_t bit = rng() % (msg.size() * 8);
        msg[bit / 8] ^= uint8_t(1u << (bit % 8));
        CHECK(sha256(msg) != base);
        msg[bit / 8] ^= uint8_t(1u << (bit % 8));
    }
    CHECK(sha256(msg) == base);
}
