#pragma once

#include <openssl/evp.h>

#include <string_view>

#include "dacc/common/bytes.hpp"

namespace dacc::crypto {

/// FIPS 202 SHA3-256 (not the pre-standard Keccak-256 used by Ethereum).
inline Hash32 sha3_256(ByteView data)
{
    Hash32 out;
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha3_256(), nullptr) != 1 || len != 32)
        throw Error("SHA3-256 digest failed");
    return out;
}

inline Hash32 sha3_256(std::string_view text) { return sha3_256(as_bytes(text)); }

/// Salted digest over length-prefixed UTF-8 fields followed by the raw nonce:
///   SHA3-256( u32be(len f1) || f1 || ... || u32be(len fn) || fn || nonce[32] )
inline Hash32 salted_digest(std::initializer_list<std::string_view> fields, const Nonce& nonce)
{
    ByteWriter w;
    for (auto f : fields) w.str(f);
    w.fixed(nonce);
    return sha3_256(w.buffer());
}

} // namespace dacc::crypto
