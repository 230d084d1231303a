#include <doctest.h>

#include <random>

#include "amlb/error.hpp"
#include "amlb/ledger.hpp"

using namespace amlb;
using namespace amlb::ledger;

namespace {

Bytes msg(const std::string& s) { return Bytes(s.begin(), s.end()); }

Chain small_chain(uint32_t difficulty, int blocks, uint64_t seed) {
    Chain chain = make_chain(difficulty, 1000);
    for (int i = 0; i < blocks; ++i) {
        auto key = keygen(seed + uint64_t(i));
        std::vector<double> energies{1.0 + i, 2.0 + i};
        auto tx = make_transaction(key, encode_meter_payload(uint32_t(i), energies));
        append_block(chain, {std::move(tx)}, 2000 + uint64_t(i));
    }
    return chain;
}

}  // namespace

TEST_CASE("lamport sign then verify round-trips") {
    auto key = keygen(7);
    const Bytes m = msg("meter reading batch");
    auto sig = sign(key, m);
    CHECK(verify(key.public_key, m, sig));
    CHECK(verify_against_pseudonym(pseudonym_of(key.public_key), m, sig));
}

TEST_CASE("any flipped message or signature bit breaks verification") {
    auto key = keygen(8);
    Bytes m = msg("0123456789abcdef0123456789abcdef");
    auto sig = sign(key, m);

    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 64; ++trial) {
        size_t bit = rng() % (m.size() * 8);
        m[bit / 8] ^= uint8_t(1u << (bit % 8));
        CHECK_FALSE(verify(key.public_key, m, sig));
        CHECK_FALSE(verify_against_pseudonym(pseudonym_of(key.public_key), m, sig));
        m[bit / 8] ^= uint8_t(1u << (bit % 8));
    }
    for (int trial = 0; trial < 64; ++trial) {
        size_t i = rng() % 256;
        size_t byte = rng() % 32;
        uint8_t mask = uint8_t(1u << (rng() % 8));
        auto flip = [&](Digest& d) {
            d[byte] ^= mask;
            CHECK_FALSE(verify(key.public_key, m, sig));
            d[byte] ^= mask;
        };
        flip(rng() % 2 ? sig.preimage[i] : sig.complement[i]);
    }
    CHECK(verify(key.public_key, m, sig));
}

TEST_CASE("one-time keys refuse to sign twice") {
    auto key = keygen(9);
    sign(key, msg("first"));
    CHECK_THROWS_AS(sign(key, msg("second")), KeyReuseError);
}

TEST_CASE("merkle root construction") {
    CHECK(compute_merkle_root({}) == Digest{});

    auto k1 = keygen(1);
    auto tx1 = make_transaction(k1, encode_meter_payload(0, std::vector<double>{1.0}));
    CHECK(compute_merkle_root({tx1}) == sha256(tx1.serialize()));

    auto k2 = keygen(2);
    auto tx2 = make_transaction(k2, encode_meter_payload(1, std::vector<double>{2.0}));
    uint8_t both[64];
    const Digest l1 = sha256(tx1.serialize());
    const Digest l2 = sha256(tx2.serialize());
    std::copy(l1.begin(), l1.end(), both);
    std::copy(l2.begin(), l2.end(), both + 32);
    CHECK(compute_merkle_root({tx1, tx2}) == sha256(both));

    // odd level duplicates the last leaf
    auto k3 = keygen(3);
    auto tx3 = make_transaction(k3, encode_meter_payload(2, std::vector<double>{3.0}));
    const Digest l3 = sha256(tx3.serialize());
    uint8_t l33[64];
    std::copy(l3.begin(), l3.end(), l33);
    std::copy(l3.begin(), l3.end(), l33 + 32);
    uint8_t top[64];
    const Digest left = sha256(both), right = sha256(l33);
    std::copy(left.begin(), left.end(), top);
    std::copy(right.begin(), right.end(), top + 32);
    CHECK(compute_merkle_root({tx1, tx2, tx3}) == sha256(top));
}

TEST_CASE("hash_block is deterministic and nonce-sensitive") {
    Block b;
    b.timestamp = 12345;
    b.nonce = 678;
    const Digest h1 = hash_block(b);
    CHECK(hash_block(b) == h1);

    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 64; ++trial) {
        Block c = b;
        c.nonce = b.nonce ^ (uint64_t(1) << (rng() % 64));
        CHECK(hash_block(c) != h1);
    }
}

TEST_CASE("mining meets the difficulty target deterministically") {
    Block b;
    b.timestamp = 42;

    Block zero = b;
    auto r0 = mine(zero, 0);
    CHECK(r0.nonce == 0);
    CHECK(r0.attempts == 1);

    Block eight = b;
    auto r8 = mine(eight, 8);
    CHECK(eight.hash[0] == 0x00);
    CHECK(leading_zero_bits(eight.hash) >= 8);

    Block again = b;
    CHECK(mine(again, 8).nonce == r8.nonce);    // ascending search, lowest nonce

    CHECK_THROWS_AS(mine(b, 33), std::invalid_argument);
}

TEST_CASE("appending N blocks yields a chain of N+1 with valid stats") {
    auto chain = small_chain(4, 5, 1000);
    CHECK(chain.blocks.size() == 6);
    CHECK(validate_chain(chain).ok);
    CHECK(chain.total_attempts >= 6);
}

TEST_CASE("append rejects corrupted signatures and leaves the chain unchanged") {
    Chain chain = make_chain(2, 1000);
    auto key = keygen(50);
    auto tx = make_transaction(key, encode_meter_payload(0, std::vector<double>{5.0}));
    tx.signature.preimage[3][5] ^= 0x40;
    CHECK_THROWS_AS(append_block(chain, {tx}, 2000), TransactionError);
    CHECK(chain.blocks.size() == 1);

    auto empty_key = keygen(51);
    CHECK_THROWS_AS(make_transaction(empty_key, Bytes{}), TransactionError);
}

TEST_CASE("a pseudonym may appear at most once per chain") {
    Chain chain = make_chain(2, 1000);
    auto key1 = keygen(60);
    const auto pub = key1.public_key;
    append_block(chain, {make_transaction(key1, encode_meter_payload(0, std::vector<double>{1.0}))}, 2000);

    // second signature under the same key pair (fresh copy defeats the local
    // used flag, the chain still rejects by pseudonym)
    LamportKeypair clone = keygen(60);
    clone.public_key = pub;
    auto tx2 = make_transaction(clone, encode_meter_payload(1, std::vector<double>{2.0}));
    CHECK_THROWS_AS(append_block(chain, {tx2}, 3000), DoubleSubmissionError);
    CHECK(chain.blocks.size() == 2);
}

TEST_CASE("chain serialization round-trips bit-exactly") {
    auto chain = small_chain(4, 3, 2000);
    const Bytes bytes = serialize_chain(chain);
    auto loaded = deserialize_chain(bytes);
    CHECK(serialize_chain(loaded) == bytes);
    CHECK(validate_chain(loaded).ok);
    CHECK(loaded.blocks.size() == chain.blocks.size());
}

TEST_CASE("sampled single-bit flips are always detected") {
    auto chain = small_chain(4, 3, 3000);
    Bytes bytes = serialize_chain(chain);

    size_t checked = 0, detected = 0;
    for (size_t bit = 0; bit < bytes.size() * 8; bit += 487) {
        bytes[bit / 8] ^= uint8_t(1u << (bit % 8));
        ++checked;
        try {
            auto tampered = deserialize_chain(bytes);
            if (!validate_chain(tampered).ok) ++detected;
        } catch (const CodecError&) {
            ++detected;
        }
        bytes[bit / 8] ^= uint8_t(1u << (bit % 8));
    }
    CHECK(checked > 100);
    CHECK(detected == checked);
    CHECK(validate_chain(deserialize_chain(bytes)).ok);    // restored
}

TEST_CASE("payload tampering is reported at the right block") {
    auto chain = small_chain(4, 4, 4000);
    chain.blocks[2].transactions[0].payload[3] ^= 0x01;
    auto result = validate_chain(chain);
    REQUIRE_FALSE(result.ok);
    CHECK(result.block_index == 2);
    CHECK(result.reason == "merkle root mismatch");
}

TEST_CASE("truncated chain files fail with a codec error naming the block") {
    auto chain = small_chain(4, 2, 5000);
    Bytes bytes = serialize_chain(chain);
    Bytes truncated(bytes.begin(), bytes.end() - 40);
    try {
        deserialize_chain(truncated);
        FAIL("expected CodecError");
    } catch (const CodecError& e) {
        CHECK(std::string(e.what()).find("block 2") != std::string::npos);
    }
}

TEST_CASE("meter payload codec") {
    std::vector<double> energies{0.5, 1.25, 7.0};
    const Bytes payload = encode_meter_payload(9, energies);
    auto decoded = decode_meter_payload(payload);
    CHECK(decoded.epoch == 9);
    CHECK(decoded.energies_wh == energies);

    Bytes bad = payload;
    bad.pop_back();
    CHECK_THROWS_AS(decode_meter_payload(bad), CodecError);
}
