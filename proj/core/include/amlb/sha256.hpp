#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace amlb {

using Digest = std::array<uint8_t, 32>;

// Incremental SHA-256 (FIPS 180-4).
class Sha256 {
  public:
    Sha256() { reset(); }

    void reset();
    void update(std::span<const uint8_t> data);
    Digest finalize();

  private:
    void compress(const uint8_t* block);

    uint32_t state_[8];
    uint8_t buf_[64];
    size_t buf_len_ = 0;
    uint64_t total_len_ = 0;
};

Digest sha256(std::span<const uint8_t> data);

std::string hex(const Digest& d);

// Number of leading zero bits of the digest, big-endian bit order.
int leading_zero_bits(const Digest& d);

}  // namespace amlb
