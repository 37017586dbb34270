#pragma once

#include <string_view>

#include "dacc/crypto/sha3.hpp"

namespace dacc::ledger::abi {

using Selector = std::array<std::uint8_t, 4>;

/// First four bytes of SHA3-256(function name).
inline Selector selector(std::string_view function)
{
    auto h = crypto::sha3_256(function);
    return {h.bytes[0], h.bytes[1], h.bytes[2], h.bytes[3]};
}

/// Call payload: selector || canonical argument bytes.
inline Bytes encode_call(std::string_view function, ByteView args = {})
{
    auto sel = selector(function);
    Bytes out(sel.begin(), sel.end());
    out.insert(out.end(), args.begin(), args.end());
    return out;
}

/// CREATE payload: length-prefixed blueprint name || constructor argument bytes.
inline Bytes encode_create(std::string_view blueprint, ByteView args)
{
    ByteWriter w;
    w.str(blueprint).raw(args);
    return std::move(w).take();
}

struct CreatePayload {
    std::string blueprint;
    Bytes args;
};

inline CreatePayload decode_create(ByteView payload)
{
    ByteReader r(payload);
    CreatePayload out;
    out.blueprint = r.str();
    auto rest = r.raw(r.remaining());
    out.args.assign(rest.begin(), rest.end());
    return out;
}

} // namespace dacc::ledger::abi
