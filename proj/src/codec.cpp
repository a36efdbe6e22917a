#include "v2v/codec.hpp"

#include <cstring>

#include <openssl/evp.h>

namespace v2v {

Bytes sha256(const Bytes& data) {
    Bytes out(32);
    unsigned len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    EVP_DigestUpdate(ctx, data.data(), data.size());
    EVP_DigestFinal_ex(ctx, out.data(), &len);
    EVP_MD_CTX_free(ctx);
    return out;
}

Bytes enc_int(const Int& x) {
    if (x < 0) throw ParameterError("enc_int: negative value");
    if (x == 0) return {0};
    size_t count = 0;
    Bytes out((mpz_sizeinbase(x.get_mpz_t(), 2) + 7) / 8);
    mpz_export(out.data(), &count, 1, 1, 1, 0, x.get_mpz_t());
    out.resize(count);
    return out;
}

Bytes enc_fixed(const Int& x, size_t width) {
    Bytes raw = enc_int(x);
    if (raw.size() > width) throw ParameterError("enc_fixed: value too wide");
    Bytes out(width, 0);
    std::memcpy(out.data() + (width - raw.size()), raw.data(), raw.size());
    return out;
}

Int dec_int(const Bytes& data) {
    Int x;
    if (!data.empty())
        mpz_import(x.get_mpz_t(), data.size(), 1, 1, 1, 0, data.data());
    return x;
}

Bytes enc_u64(uint64_t x) {
    Bytes out(8);
    for (int i = 7; i >= 0; --i) {
        out[i] = static_cast<uint8_t>(x & 0xff);
        x >>= 8;
    }
    return out;
}

namespace {

size_t width_of(const Int& M) {
    return (mpz_sizeinbase(M.get_mpz_t(), 2) + 7) / 8;
}

void append(Bytes& out, const Bytes& part) {
    out.insert(out.end(), part.begin(), part.end());
}

// D || counter expansion to `n` bytes.
Bytes expand(const Bytes& digest, size_t n) {
    Bytes out;
    out.reserve(n + 32);
    uint64_t counter = 0;
    while (out.size() < n) {
        Bytes block = digest;
        append(block, enc_u64(counter++));
        append(out, sha256(block));
    }
    out.resize(n);
    return out;
}

} // namespace

Int hash_to_zm(uint8_t domain_tag, const std::vector<Bytes>& parts, const Int& M) {
    if (M < 2) throw ParameterError("hash_to_zm: modulus must be >= 2");
    Bytes msg{domain_tag};
    for (const auto& part : parts) {
        append(msg, enc_u64(part.size()));
        append(msg, part);
    }
    Bytes digest = sha256(msg);
    Bytes wide = expand(digest, width_of(M) + 8);
    return dec_int(wide) % M;
}

Int eno_of(uint64_t t, const Bytes& m, const Int& M) {
    Bytes hm = sha256(m);
    Bytes te = enc_u64(t);
    Bytes mixed(te);
    for (size_t i = 0; i < 8; ++i) mixed[i] ^= hm[i];
    return hash_to_zm(0x01, {mixed, hm}, M);
}

Int vno_of(uint64_t t, const Bytes& m, const Int& pseudonym, const Int& M) {
    return hash_to_zm(0x02, {enc_u64(t), sha256(m), enc_fixed(pseudonym, width_of(M))}, M);
}

Int cluster_hash(const Int& rand, const Int& c_xor_t, const Int& M) {
    return hash_to_zm(0x03, {enc_int(rand), enc_int(c_xor_t)}, M);
}

Key256 derive_key(const Int& x) {
    Bytes msg{0x10};
    append(msg, enc_int(x));
    Bytes digest = sha256(msg);
    Key256 key;
    std::memcpy(key.data(), digest.data(), 32);
    return key;
}

namespace {

Bytes aes256_block(const Key256& key, const uint8_t* in, bool encrypt) {
    Bytes out(16);
    int len = 0;
    EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
    if (encrypt)
        EVP_EncryptInit_ex(ctx, EVP_aes_256_ecb(), nullptr, key.data(), nullptr);
    else
        EVP_DecryptInit_ex(ctx, EVP_aes_256_ecb(), nullptr, key.data(), nullptr);
    EVP_CIPHER_CTX_set_padding(ctx, 0);
    if (encrypt)
        EVP_EncryptUpdate(ctx, out.data(), &len, in, 16);
    else
        EVP_DecryptUpdate(ctx, out.data(), &len, in, 16);
    EVP_CIPHER_CTX_free(ctx);
    return out;
}

// Round function for the wide-block Feistel: hash-expanded keystream over
// (key, round, half).
Bytes feistel_f(const Key256& key, uint8_t round, const Bytes& half) {
    Bytes msg{0x20, round};
    msg.insert(msg.end(), key.begin(), key.end());
    msg.insert(msg.end(), half.begin(), half.end());
    return expand(sha256(msg), half.size());
}

Bytes feistel(const Key256& key, const Bytes& block, bool forward) {
    size_t half = block.size() / 2;
    Bytes left(block.begin(), block.begin() + half);
    Bytes right(block.begin() + half, block.end());
    const int rounds = 4;
    for (int i = 0; i < rounds; ++i) {
        uint8_t r = static_cast<uint8_t>(forward ? i : rounds - 1 - i);
        // forward: (L, R) -> (R, L ^ F(R)); inverse walks the rounds backwards
        if (forward) {
            Bytes f = feistel_f(key, r, right);
            for (size_t j = 0; j < half; ++j) left[j] ^= f[j];
            std::swap(left, right);
        } else {
            std::swap(left, right);
            Bytes f = feistel_f(key, r, right);
            for (size_t j = 0; j < half; ++j) left[j] ^= f[j];
        }
    }
    Bytes out = left;
    out.insert(out.end(), right.begin(), right.end());
    return out;
}

} // namespace

Bytes prp(const Key256& key, const Bytes& block) {
    if (block.empty() || block.size() % 16 != 0)
        throw ParameterError("prp: block length must be a positive multiple of 16");
    if (block.size() == 16) return aes256_block(key, block.data(), true);
    return feistel(key, block, true);
}

Bytes prp_inv(const Key256& key, const Bytes& block) {
    if (block.empty() || block.size() % 16 != 0)
        throw ParameterError("prp_inv: block length must be a positive multiple of 16");
    if (block.size() == 16) return aes256_block(key, block.data(), false);
    return feistel(key, block, false);
}

BroadcastSecrets advance_t(const BroadcastSecrets& s, uint64_t now_ms) {
    if (s.gamma_ms == 0) throw ParameterError("advance_t: gamma must be positive");
    BroadcastSecrets out = s;
    if (now_ms <= s.last_update_ms) return out;
    uint64_t steps = (now_ms - s.last_update_ms) / s.gamma_ms;
    out.t = s.t + s.alpha * steps;
    out.last_update_ms = s.last_update_ms + steps * s.gamma_ms;
    return out;
}

Bytes serialize_envelope(const Envelope& env, const Int& M) {
    Bytes out;
    uint32_t n = static_cast<uint32_t>(env.payload.size());
    for (int i = 3; i >= 0; --i) out.push_back(static_cast<uint8_t>((n >> (8 * i)) & 0xff));
    append(out, env.payload);
    append(out, enc_fixed(env.pseudonym, width_of(M)));
    append(out, enc_fixed(env.vno, width_of(M)));
    append(out, enc_u64(env.sent_at));
    return out;
}

Envelope deserialize_envelope(const Bytes& wire, const Int& M) {
    size_t w = width_of(M);
    if (wire.size() < 4) throw ParameterError("deserialize_envelope: truncated");
    uint32_t n = 0;
    for (int i = 0; i < 4; ++i) n = (n << 8) | wire[i];
    if (wire.size() != 4 + n + 2 * w + 8)
        throw ParameterError("deserialize_envelope: length mismatch");
    Envelope env;
    env.payload.assign(wire.begin() + 4, wire.begin() + 4 + n);
    env.pseudonym = dec_int(Bytes(wire.begin() + 4 + n, wire.begin() + 4 + n + w));
    env.vno = dec_int(Bytes(wire.begin() + 4 + n + w, wire.begin() + 4 + n + 2 * w));
    uint64_t ts = 0;
    for (size_t i = 4 + n + 2 * w; i < wire.size(); ++i) ts = (ts << 8) | wire[i];
    env.sent_at = ts;
    return env;
}

} // namespace v2v
