#pragma once

#include <sodium.h>

#include <optional>

#include "dacc/crypto/sha3.hpp"

namespace dacc::crypto {

inline void ensure_sodium()
{
    static const bool ready = sodium_init() >= 0;
    if (!ready) throw Error("libsodium initialisation failed");
}

using PublicKey = FixedBytes<32, struct PublicKeyTag>;

/// Address = last 20 bytes of SHA3-256(public key).
inline Address address_of(const PublicKey& pk)
{
    auto h = sha3_256(pk.view());
    Address a;
    std::copy(h.bytes.begin() + 12, h.bytes.end(), a.bytes.begin());
    return a;
}

/// Ed25519 signing key; the same key converts to X25519 for sealed boxes.
class KeyPair {
public:
    /// The 32-byte private seed is SHA3-256(seed), so equal seeds give equal keys.
    static KeyPair from_seed(ByteView seed)
    {
        if (seed.empty()) throw InvalidArgument("account seed must be nonempty");
        ensure_sodium();
        auto private_seed = sha3_256(seed);
        KeyPair kp;
        crypto_sign_seed_keypair(kp.public_key_.data(), kp.secret_.data(), private_seed.data());
        return kp;
    }
    static KeyPair from_seed(std::string_view seed) { return from_seed(as_bytes(seed)); }

    const PublicKey& public_key() const noexcept { return public_key_; }
    Address address() const { return address_of(public_key_); }

    /// Detached Ed25519 signature (64 bytes).
    Bytes sign(ByteView message) const
    {
        Bytes sig(crypto_sign_BYTES);
        crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), secret_.data());
        return sig;
    }

    std::optional<Bytes> open_sealed(ByteView ciphertext) const;

private:
    PublicKey public_key_;
    std::array<std::uint8_t, crypto_sign_SECRETKEYBYTES> secret_{};
};

inline bool verify_signature(const PublicKey& pk, ByteView message, ByteView signature)
{
    ensure_sodium();
    if (signature.size() != crypto_sign_BYTES) return false;
    return crypto_sign_verify_detached(signature.data(), message.data(), message.size(), pk.data()) == 0;
}

inline constexpr std::size_t sealed_overhead = crypto_box_SEALBYTES;

/// Anonymous sealed box addressed to an Ed25519 public key. The ephemeral key
/// comes from `ephemeral_seed`, so sealing is reproducible for a fixed seed.
/// Output is byte-compatible with crypto_box_seal.
inline Bytes seal(ByteView message, const PublicKey& recipient, const Hash32& ephemeral_seed)
{
    ensure_sodium();
    std::array<std::uint8_t, crypto_box_PUBLICKEYBYTES> rpk{};
    if (crypto_sign_ed25519_pk_to_curve25519(rpk.data(), recipient.data()) != 0)
        throw InvalidArgument("recipient key is not a valid Ed25519 point");
    std::array<std::uint8_t, crypto_box_PUBLICKEYBYTES> epk{};
    std::array<std::uint8_t, crypto_box_SECRETKEYBYTES> esk{};
    crypto_box_seed_keypair(epk.data(), esk.data(), ephemeral_seed.data());

    std::array<std::uint8_t, crypto_box_NONCEBYTES> nonce{};
    crypto_generichash_state st;
    crypto_generichash_init(&st, nullptr, 0, nonce.size());
    crypto_generichash_update(&st, epk.data(), epk.size());
    crypto_generichash_update(&st, rpk.data(), rpk.size());
    crypto_generichash_final(&st, nonce.data(), nonce.size());

    Bytes out(epk.size() + crypto_box_MACBYTES + message.size());
    std::copy(epk.begin(), epk.end(), out.begin());
    if (crypto_box_easy(out.data() + epk.size(), message.data(), message.size(), nonce.data(), rpk.data(), esk.data()) != 0)
        throw Error("sealed box encryption failed");
    sodium_memzero(esk.data(), esk.size());
    return out;
}

/// Non-reproducible variant using the system RNG.
inline Bytes seal(ByteView message, const PublicKey& recipient)
{
    ensure_sodium();
    Hash32 seed;
    randombytes_buf(seed.data(), seed.size());
    return seal(message, recipient, seed);
}

inline std::optional<Bytes> KeyPair::open_sealed(ByteView ciphertext) const
{
    if (ciphertext.size() < crypto_box_SEALBYTES) return std::nullopt;
    std::array<std::uint8_t, crypto_box_PUBLICKEYBYTES> pk{};
    std::array<std::uint8_t, crypto_box_SECRETKEYBYTES> sk{};
    if (crypto_sign_ed25519_pk_to_curve25519(pk.data(), public_key_.data()) != 0) return std::nullopt;
    crypto_sign_ed25519_sk_to_curve25519(sk.data(), secret_.data());
    Bytes out(ciphertext.size() - crypto_box_SEALBYTES);
    int rc = crypto_box_seal_open(out.data(), ciphertext.data(), ciphertext.size(), pk.data(), sk.data());
    sodium_memzero(sk.data(), sk.size());
    if (rc != 0) return std::nullopt;
    return out;
}

} // namespace dacc::crypto
