#pragma once

#include "dacc/crypto/sha3.hpp"
#include "dacc/policy/ast.hpp"

namespace dacc::compiler {

/// Attribute of an obfuscated pattern; no value digest means wildcard.
struct ObfuscatedAttribute {
    Hash32 name;
    std::optional<Hash32> value;
    bool operator==(const ObfuscatedAttribute&) const = default;
};

struct ObfuscatedPattern {
    Hash32 activity;
    std::vector<ObfuscatedAttribute> attributes;
    bool operator==(const ObfuscatedPattern&) const = default;
};

struct ObfuscatedEvent {
    Hash32 activity;
    std::vector<std::pair<Hash32, Hash32>> attributes; // (name digest, value digest)
    bool operator==(const ObfuscatedEvent&) const = default;
};

class ObfuscationError : public Error {
public:
    using Error::Error;
};

// Digest layout: SHA3-256 over u32be-length-prefixed UTF-8 fields, then the nonce.
inline Hash32 activity_digest(std::string_view activity, const Nonce& n) { return crypto::salted_digest({activity}, n); }
inline Hash32 name_digest(std::string_view attr, const Nonce& n) { return crypto::salted_digest({attr}, n); }
inline Hash32 value_digest(std::string_view attr, std::string_view value, const Nonce& n)
{
    return crypto::salted_digest({attr, value}, n);
}

inline ObfuscatedPattern obfuscate(const policy::EventPattern& p, const Nonce& nonce)
{
    ObfuscatedPattern out{activity_digest(p.activity, nonce), {}};
    for (const auto& a : p.attributes) {
        ObfuscatedAttribute oa{name_digest(a.name, nonce), std::nullopt};
        switch (a.kind) {
        case policy::MatchKind::equals: oa.value = value_digest(a.name, a.value, nonce); break;
        case policy::MatchKind::wildcard: break;
        case policy::MatchKind::variable:
            throw ObfuscationError("pattern " + p.activity + " still contains variable $" + a.value);
        }
        out.attributes.push_back(oa);
    }
    return out;
}

/// Nonce given as raw bytes; anything but 32 bytes is rejected.
inline ObfuscatedPattern obfuscate(const policy::EventPattern& p, ByteView nonce)
{
    return obfuscate(p, Nonce::from_span(nonce));
}

inline ObfuscatedEvent obfuscate(const policy::Event& e, const Nonce& nonce)
{
    ObfuscatedEvent out{activity_digest(e.activity, nonce), {}};
    for (const auto& [k, v] : e.attributes) out.attributes.emplace_back(name_digest(k, nonce), value_digest(k, v, nonce));
    return out;
}

/// Equality-only matching on digests.
inline bool match_obfuscated(const ObfuscatedPattern& p, const ObfuscatedEvent& e)
{
    if (p.activity != e.activity) return false;
    for (const auto& a : p.attributes) {
        if (!a.value) continue;
        bool found = false;
        for (const auto& [n, v] : e.attributes)
            if (n == a.name && v == *a.value) {
                found = true;
                break;
            }
        if (!found) return false;
    }
    return true;
}

inline void encode(ByteWriter& w, const ObfuscatedPattern& p)
{
    w.fixed(p.activity).u32(static_cast<std::uint32_t>(p.attributes.size()));
    for (const auto& a : p.attributes) {
        w.fixed(a.name).boolean(a.value.has_value());
        if (a.value) w.fixed(*a.value);
    }
}

inline ObfuscatedPattern decode_pattern(ByteReader& r)
{
    ObfuscatedPattern p;
    p.activity = r.fixed<Hash32>();
    auto n = r.u32();
    if (n > r.remaining() / 33) throw DecodeError("attribute count exceeds payload");
    for (std::uint32_t i = 0; i < n; ++i) {
        ObfuscatedAttribute a{r.fixed<Hash32>(), std::nullopt};
        if (r.boolean()) a.value = r.fixed<Hash32>();
        p.attributes.push_back(a);
    }
    return p;
}

inline void encode(ByteWriter& w, const ObfuscatedEvent& e)
{
    w.fixed(e.activity).u32(static_cast<std::uint32_t>(e.attributes.size()));
    for (const auto& [n, v] : e.attributes) w.fixed(n).fixed(v);
}

inline ObfuscatedEvent decode_event(ByteReader& r)
{
    ObfuscatedEvent e;
    e.activity = r.fixed<Hash32>();
    auto n = r.u32();
    if (n > r.remaining() / 64) throw DecodeError("attribute count exceeds payload");
    for (std::uint32_t i = 0; i < n; ++i) {
        auto name = r.fixed<Hash32>();
        e.attributes.emplace_back(name, r.fixed<Hash32>());
    }
    return e;
}

inline Bytes encode(const ObfuscatedEvent& e)
{
    ByteWriter w;
    encode(w, e);
    return std::move(w).take();
}

} // namespace dacc::compiler
