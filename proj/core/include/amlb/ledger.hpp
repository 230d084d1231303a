#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "amlb/bytes.hpp"
#include "amlb/sha256.hpp"

namespace amlb::ledger {

using LamportPublicKey = std::array<std::array<Digest, 256>, 2>;

// One-time Lamport signing key over SHA-256. public_key[b][i] is the digest of
// secret[b][i]; bit i of the message digest selects which secret is revealed.
struct LamportKeypair {
    std::array<std::array<Digest, 256>, 2> secret;
    LamportPublicKey public_key;
    bool used = false;
};

// Revealed preimages plus the public hashes of the unrevealed side, enough to
// reconstruct the full public key and check it against a pseudonym.
struct LamportSignature {
    std::array<Digest, 256> preimage;
    std::array<Digest, 256> complement;
};

LamportKeypair keygen(uint64_t seed);
LamportSignature sign(LamportKeypair& key, std::span<const uint8_t> message);
bool verify(const LamportPublicKey& pub, std::span<const uint8_t> message, const LamportSignature& sig);

Bytes public_key_bytes(const LamportPublicKey& pub);
Digest pseudonym_of(const LamportPublicKey& pub);
bool verify_against_pseudonym(const Digest& pseudonym, std::span<const uint8_t> message,
                              const LamportSignature& sig);

struct MeterTransaction {
    Digest pseudonym{};
    Bytes payload;
    LamportSignature signature;

    void serialize_into(ByteWriter& w) const;
    Bytes serialize() const;
    static MeterTransaction deserialize(ByteReader& r);
};

MeterTransaction make_transaction(LamportKeypair& key, Bytes payload);

struct Block {
    uint32_t version = 1;
    Digest prev_hash{};
    Digest merkle_root{};
    uint64_t timestamp = 0;
    uint32_t difficulty = 0;
    uint64_t nonce = 0;
    std::vector<MeterTransaction> transactions;
    Digest hash{};    // hash_block of the header fields above
};

// SHA-256 over the canonical header: version u32 BE || prev_hash || merkle_root
// || timestamp u64 BE || difficulty u32 BE || nonce u64 BE.
Digest hash_block(const Block& block);

Digest compute_merkle_root(const std::vector<MeterTransaction>& transactions);

struct MineResult {
    uint64_t nonce = 0;
    uint64_t attempts = 0;
};

// Ascending search from nonce 0; deterministic and returns the lowest nonce
// whose hash clears the difficulty.
MineResult mine(Block& block, uint32_t difficulty);

struct Chain {
    uint32_t difficulty = 0;
    std::vector<Block> blocks;
    uint64_t total_attempts = 0;    // nonce attempts across all mined blocks
};

Chain make_chain(uint32_t difficulty, uint64_t genesis_timestamp);
const Block& append_block(Chain& chain, std::vector<MeterTransaction> transactions, uint64_t timestamp);

struct ValidationResult {
    bool ok = true;
    size_t block_index = 0;
    std::string reason;
};

// Re-verifies stored hashes, proof of work, links, Merkle roots, signatures
// and pseudonym uniqueness. Failures are returned, never thrown.
ValidationResult validate_chain(const Chain& chain);

// Chain file: "AMLC" || version u16 BE || difficulty u32 BE || length-prefixed blocks.
Bytes serialize_chain(const Chain& chain);
Chain deserialize_chain(std::span<const uint8_t> bytes);

// Meter payload: epoch u32 BE || count u32 BE || window energies (Wh) f64 BE.
Bytes encode_meter_payload(uint32_t epoch, std::span<const double> energies_wh);
struct MeterPayload {
    uint32_t epoch = 0;
    std::vector<double> energies_wh;
};
MeterPayload decode_meter_payload(std::span<const uint8_t> payload);

}  // namespace amlb::ledger
