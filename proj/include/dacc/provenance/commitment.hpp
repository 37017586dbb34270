#pragma once

#include "dacc/crypto/sha3.hpp"
#include "dacc/provenance/data_model.hpp"

namespace dacc::provenance {

/// Salted commitment to one data instance: 64 bytes, no plaintext.
struct DataReference {
    Hash32 instantiation; // H(path || nonce)
    Hash32 value;         // H(path || value || nonce)

    auto operator<=>(const DataReference&) const = default;

    static constexpr std::size_t encoded_size = 64;

    Bytes encode() const
    {
        ByteWriter w;
        w.fixed(instantiation).fixed(value);
        return std::move(w).take();
    }

    static DataReference decode(ByteReader& r)
    {
        DataReference d;
        d.instantiation = r.fixed<Hash32>();
        d.value = r.fixed<Hash32>();
        return d;
    }
};

/// Commits to an instance whose value is already in canonical form.
inline DataReference commit(const DataInstance& d, const Nonce& nonce)
{
    return {crypto::salted_digest({d.path}, nonce), crypto::salted_digest({d.path, d.value}, nonce)};
}

/// Validates against the model and canonicalises the value before committing.
inline DataReference commit(const DataModel& model, const DataInstance& d, const Nonce& nonce)
{
    return commit(model.canonical(d), nonce);
}

inline DataReference commit(const DataModel& model, const DataInstance& d, ByteView nonce)
{
    return commit(model, d, Nonce::from_span(nonce));
}

/// True iff both digests recompute exactly from the plaintext and nonce.
inline bool verify_commitment(const DataInstance& d, const Nonce& nonce, const DataReference& ref)
{
    return commit(d, nonce) == ref;
}

} // namespace dacc::provenance
