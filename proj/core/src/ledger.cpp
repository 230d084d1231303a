#include "amlb/ledger.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "amlb/error.hpp"

namespace amlb::ledger {

namespace {

constexpr uint32_t kMaxDifficulty = 32;
constexpr uint16_t kChainFormatVersion = 1;

inline int message_bit(const Digest& digest, size_t i) {
    return (digest[i / 8] >> (7 - i % 8)) & 1;
}

void check_difficulty(uint32_t difficulty) {
    if (difficulty > kMaxDifficulty)
        throw std::invalid_argument("difficulty must be in [0, 32]");
}

}  // namespace

LamportKeypair keygen(uint64_t seed) {
    std::mt19937_64 rng(seed);
    LamportKeypair key;
    for (int b = 0; b < 2; ++b) {
        for (size_t i = 0; i < 256; ++i) {
            Digest& s = key.secret[b][i];
            for (size_t k = 0; k < 32; k += 8) {
                uint64_t v = rng();
                for (size_t j = 0; j < 8; ++j) s[k + j] = uint8_t(v >> (8 * j));
            }
            key.public_key[b][i] = sha256(s);
        }
    }
    return key;
}

LamportSignature sign(LamportKeypair& key, std::span<const uint8_t> message) {
    if (key.used) throw KeyReuseError("one-time key has already signed");
    key.used = true;
    const Digest digest = sha256(message);
    LamportSignature sig;
    for (size_t i = 0; i < 256; ++i) {
        const int b = message_bit(digest, i);
        sig.preimage[i] = key.secret[b][i];
        sig.complement[i] = key.public_key[1 - b][i];
    }
    return sig;
}

bool verify(const LamportPublicKey& pub, std::span<const uint8_t> message, const LamportSignature& sig) {
    const Digest digest = sha256(message);
    for (size_t i = 0; i < 256; ++i) {
        const int b = message_bit(digest, i);
        if (sha256(sig.preimage[i]) != pub[b][i]) return false;
        if (sig.complement[i] != pub[1 - b][i]) return false;
    }
    return true;
}

Bytes public_key_bytes(const LamportPublicKey& pub) {
    Bytes out;
    out.reserve(2 * 256 * 32);
    for (int b = 0; b < 2; ++b)
        for (size_t i = 0; i < 256; ++i) out.insert(out.end(), pub[b][i].begin(), pub[b][i].end());
    return out;
}

Digest pseudonym_of(const LamportPublicKey& pub) { return sha256(public_key_bytes(pub)); }

bool verify_against_pseudonym(const Digest& pseudonym, std::span<const uint8_t> message,
                              const LamportSignature& sig) {
    const Digest digest = sha256(message);
    // Reassemble the public key: hashed preimages on the revealed side,
    // complement hashes on the other. A single digest compare then binds the
    // signature, the message and the pseudonym together.
    Sha256 h;
    std::array<Digest, 256> revealed;
    for (size_t i = 0; i < 256; ++i) revealed[i] = sha256(sig.preimage[i]);
    for (int b = 0; b < 2; ++b) {
        for (size_t i = 0; i < 256; ++i) {
            const Digest& d = (message_bit(digest, i) == b) ? revealed[i] : sig.complement[i];
            h.update(d);
        }
    }
    return h.finalize() == pseudonym;
}

void MeterTransaction::serialize_into(ByteWriter& w) const {
    w.raw(pseudonym);
    w.u32(uint32_t(payload.size()));
    w.raw(payload);
    for (size_t i = 0; i < 256; ++i) {
        w.raw(signature.preimage[i]);
        w.raw(signature.complement[i]);
    }
}

Bytes MeterTransaction::serialize() const {
    ByteWriter w;
    serialize_into(w);
    return w.take();
}

MeterTransaction MeterTransaction::deserialize(ByteReader& r) {
    MeterTransaction tx;
    auto p = r.take(32);
    std::copy(p.begin(), p.end(), tx.pseudonym.begin());
    const uint32_t len = r.u32();
    auto payload = r.take(len);
    tx.payload.assign(payload.begin(), payload.end());
    for (size_t i = 0; i < 256; ++i) {
        auto a = r.take(32);
        std::copy(a.begin(), a.end(), tx.signature.preimage[i].begin());
        auto b = r.take(32);
        std::copy(b.begin(), b.end(), tx.signature.complement[i].begin());
    }
    return tx;
}

MeterTransaction make_transaction(LamportKeypair& key, Bytes payload) {
    if (payload.empty()) throw TransactionError("payload must be non-empty");
    MeterTransaction tx;
    tx.pseudonym = pseudonym_of(key.public_key);
    tx.payload = std::move(payload);
    tx.signature = sign(key, tx.payload);
    return tx;
}

Digest hash_block(const Block& block) {
    uint8_t header[88];
    size_t p = 0;
    auto put_u32 = [&](uint32_t v) {
        for (int s = 24; s >= 0; s -= 8) header[p++] = uint8_t(v >> s);
    };
    auto put_u64 = [&](uint64_t v) {
        for (int s = 56; s >= 0; s -= 8) header[p++] = uint8_t(v >> s);
    };
    put_u32(block.version);
    std::copy(block.prev_hash.begin(), block.prev_hash.end(), header + p);
    p += 32;
    std::copy(block.merkle_root.begin(), block.merkle_root.end(), header + p);
    p += 32;
    put_u64(block.timestamp);
    put_u32(block.difficulty);
    put_u64(block.nonce);
    return sha256(std::span(header, p));
}

Digest compute_merkle_root(const std::vector<MeterTransaction>& transactions) {
    if (transactions.empty()) return Digest{};

    std::vector<Digest> level;
    level.reserve(transactions.size());
    ByteWriter buf;
    for (const auto& tx : transactions) {
        buf = ByteWriter{};
        tx.serialize_into(buf);
        level.push_back(sha256(buf.bytes()));
    }
    while (level.size() > 1) {
        if (level.size() % 2 != 0) level.push_back(level.back());
        std::vector<Digest> next;
        next.reserve(level.size() / 2);
        for (size_t i = 0; i < level.size(); i += 2) {
            uint8_t pair[64];
            std::copy(level[i].begin(), level[i].end(), pair);
            std::copy(level[i + 1].begin(), level[i + 1].end(), pair + 32);
            next.push_back(sha256(pair));
        }
        level = std::move(next);
    }
    return level[0];
}

MineResult mine(Block& block, uint32_t difficulty) {
    check_difficulty(difficulty);
    block.difficulty = difficulty;
    for (uint64_t nonce = 0;; ++nonce) {
        block.nonce = nonce;
        const Digest h = hash_block(block);
        if (leading_zero_bits(h) >= int(difficulty)) {
            block.hash = h;
            return {nonce, nonce + 1};
        }
        if (nonce == UINT64_MAX) throw MiningError("nonce space exhausted");
    }
}

Chain make_chain(uint32_t difficulty, uint64_t genesis_timestamp) {
    check_difficulty(difficulty);
    Chain chain;
    chain.difficulty = difficulty;
    Block genesis;
    genesis.timestamp = genesis_timestamp;
    genesis.merkle_root = compute_merkle_root(genesis.transactions);
    const MineResult r = mine(genesis, difficulty);
    chain.total_attempts += r.attempts;
    chain.blocks.push_back(std::move(genesis));
    return chain;
}

const Block& append_block(Chain& chain, std::vector<MeterTransaction> transactions, uint64_t timestamp) {
    if (chain.blocks.empty()) throw std::invalid_argument("chain has no genesis block");

    std::set<Digest> seen;
    for (const auto& block : chain.blocks)
        for (const auto& tx : block.transactions) seen.insert(tx.pseudonym);
    for (const auto& tx : transactions) {
        if (tx.payload.empty()) throw TransactionError("payload must be non-empty");
        if (!verify_against_pseudonym(tx.pseudonym, tx.payload, tx.signature))
            throw TransactionError("transaction signature does not verify");
        if (!seen.insert(tx.pseudonym).second)
            throw DoubleSubmissionError("pseudonym already submitted to this chain");
    }

    Block block;
    block.prev_hash = chain.blocks.back().hash;
    block.timestamp = timestamp;
    block.transactions = std::move(transactions);
    block.merkle_root = compute_merkle_root(block.transactions);
    const MineResult r = mine(block, chain.difficulty);
    chain.total_attempts += r.attempts;
    chain.blocks.push_back(std::move(block));
    return chain.blocks.back();
}

ValidationResult validate_chain(const Chain& chain) {
    auto fail = [](size_t index, std::string reason) {
        return ValidationResult{false, index, std::move(reason)};
    };
    if (chain.blocks.empty()) return fail(0, "chain has no genesis block");
    if (chain.difficulty > kMaxDifficulty) return fail(0, "chain difficulty out of range");

    // Cheap structural sweep first: header hashes, proof of work, links.
    for (size_t i = 0; i < chain.blocks.size(); ++i) {
        const Block& b = chain.blocks[i];
        if (b.difficulty != chain.difficulty) return fail(i, "block difficulty differs from chain difficulty");
        if (hash_block(b) != b.hash) return fail(i, "stored hash does not match header");
        if (leading_zero_bits(b.hash) < int(chain.difficulty)) return fail(i, "insufficient proof of work");
        const Digest expected_prev = i == 0 ? Digest{} : chain.blocks[i - 1].hash;
        if (b.prev_hash != expected_prev) return fail(i, "broken link to previous block");
    }
    for (size_t i = 0; i < chain.blocks.size(); ++i) {
        if (compute_merkle_root(chain.blocks[i].transactions) != chain.blocks[i].merkle_root)
            return fail(i, "merkle root mismatch");
    }
    std::set<Digest> seen;
    for (size_t i = 0; i < chain.blocks.size(); ++i) {
        for (const auto& tx : chain.blocks[i].transactions) {
            if (tx.payload.empty()) return fail(i, "empty transaction payload");
            if (!verify_against_pseudonym(tx.pseudonym, tx.payload, tx.signature))
                return fail(i, "signature failure");
            if (!seen.insert(tx.pseudonym).second) return fail(i, "pseudonym reuse");
        }
    }
    return {};
}

Bytes serialize_chain(const Chain& chain) {
    ByteWriter w;
    w.raw("AMLC");
    w.u16(kChainFormatVersion);
    w.u32(chain.difficulty);
    for (const auto& b : chain.blocks) {
        ByteWriter bw;
        bw.raw(b.hash);
        bw.u32(b.version);
        bw.raw(b.prev_hash);
        bw.raw(b.merkle_root);
        bw.u64(b.timestamp);
        bw.u32(b.difficulty);
        bw.u64(b.nonce);
        bw.u32(uint32_t(b.transactions.size()));
        for (const auto& tx : b.transactions) tx.serialize_into(bw);
        w.u32(uint32_t(bw.bytes().size()));
        w.raw(bw.bytes());
    }
    return w.take();
}

Chain deserialize_chain(std::span<const uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect("AMLC");
    if (r.u16() != kChainFormatVersion) throw CodecError("unsupported chain format version");
    Chain chain;
    chain.difficulty = r.u32();
    if (chain.difficulty > kMaxDifficulty) throw CodecError("chain difficulty out of range");

    size_t index = 0;
    while (r.remaining() > 0) {
        try {
            const uint32_t len = r.u32();
            ByteReader br(r.take(len));
            Block b;
            auto h = br.take(32);
            std::copy(h.begin(), h.end(), b.hash.begin());
            b.version = br.u32();
            auto prev = br.take(32);
            std::copy(prev.begin(), prev.end(), b.prev_hash.begin());
            auto root = br.take(32);
            std::copy(root.begin(), root.end(), b.merkle_root.begin());
            b.timestamp = br.u64();
            b.difficulty = br.u32();
            b.nonce = br.u64();
            const uint32_t tx_count = br.u32();
            b.transactions.reserve(std::min<uint32_t>(tx_count, 4096));
            for (uint32_t t = 0; t < tx_count; ++t)
                b.transactions.push_back(MeterTransaction::deserialize(br));
            br.expect_end();
            chain.blocks.push_back(std::move(b));
        } catch (const CodecError& e) {
            throw CodecError("block " + std::to_string(index) + ": " + e.what());
        }
        ++index;
    }
    return chain;
}

Bytes encode_meter_payload(uint32_t epoch, std::span<const double> energies_wh) {
    ByteWriter w;
    w.u32(epoch);
    w.u32(uint32_t(energies_wh.size()));
    for (double e : energies_wh) w.f64(e);
    return w.take();
}

MeterPayload decode_meter_payload(std::span<const uint8_t> payload) {
    ByteReader r(payload);
    MeterPayload p;
    p.epoch = r.u32();
    const uint32_t count = r.u32();
    if (uint64_t(count) * 8 != r.remaining()) throw CodecError("meter payload length mismatch");
    p.energies_wh.resize(count);
    for (double& e : p.energies_wh) e = r.f64();
    r.expect_end();
    return p;
}

}  // namespace amlb::ledger
