#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "v2v/numtheory.hpp"

namespace v2v {

using Bytes = std::vector<uint8_t>;
using Key256 = std::array<uint8_t, 32>;

Bytes sha256(const Bytes& data);

// Minimal big-endian encoding, at least one byte.
Bytes enc_int(const Int& x);
// Big-endian, zero-padded to exactly `width` bytes. Throws if x needs more.
Bytes enc_fixed(const Int& x, size_t width);
Int dec_int(const Bytes& data);
Bytes enc_u64(uint64_t x);

// Group hash into Z_M: D = H(tag || len-prefixed parts), then counter-mode
// expansion to enc_width(M)+8 bytes, reduced mod M.
Int hash_to_zm(uint8_t domain_tag, const std::vector<Bytes>& parts, const Int& M);

// eno = H(t ^ m): t's 8-byte encoding XORed into the first 8 bytes of m's
// digest, under domain tag 0x01.
Int eno_of(uint64_t t, const Bytes& m, const Int& M);

// vno = H(t ^ m ^ pseudonym), domain tag 0x02.
Int vno_of(uint64_t t, const Bytes& m, const Int& pseudonym, const Int& M);

// h_c = H(rand, c ^ t), domain tag 0x03. Used for cluster membership
// authenticators.
Int cluster_hash(const Int& rand, const Int& c_xor_t, const Int& M);

// Keyed invertible permutation over blocks of 16k bytes. Single blocks use
// AES-256; longer inputs use a 4-round Feistel network over the two halves
// with an AES-CTR-style round function, length-preserving.
Bytes prp(const Key256& key, const Bytes& block);
Bytes prp_inv(const Key256& key, const Bytes& block);

// 32-byte PRP/cipher key from an arbitrary-size integer.
Key256 derive_key(const Int& x);

// Shared epoch state: t += alpha every gamma_ms of simulated time.
struct BroadcastSecrets {
    uint64_t t = 0;
    uint64_t alpha = 1;
    uint64_t gamma_ms = 1000;
    uint64_t last_update_ms = 0;
};

BroadcastSecrets advance_t(const BroadcastSecrets& s, uint64_t now_ms);

struct Envelope {
    Bytes payload;
    Int pseudonym;
    Int vno;
    uint64_t sent_at = 0;
};

// Wire format: u32 payload length, payload, pseudonym and vno as enc_M
// (fixed width from M), u64 sent_at. All integers big-endian.
Bytes serialize_envelope(const Envelope& env, const Int& M);
Envelope deserialize_envelope(const Bytes& wire, const Int& M);

} // namespace v2v
