#pragma once

#include <algorithm>
#include <fstream>

#include "dacc/provenance/commitment.hpp"

namespace dacc::provenance {

enum class RecipientRole : std::uint8_t { controller, processor };

inline std::string_view to_string(RecipientRole r) { return r == RecipientRole::controller ? "controller" : "processor"; }

class GraphError : public Error {
public:
    using Error::Error;
};

struct Grant {
    DataReference reference;
    DataInstance plaintext;
    Hash32 tx_hash;
    std::uint64_t sequence = 0; // position in the subject's grant order

    bool operator==(const Grant&) const = default;
};

struct RecipientEntry {
    Address recipient;
    RecipientRole role = RecipientRole::controller;
    Address contract;
    Nonce nonce;
    std::vector<Grant> grants;
    std::optional<Address> parent; // processors only

    bool operator==(const RecipientEntry&) const = default;
};

struct TrailEntry {
    Address recipient;
    RecipientRole role = RecipientRole::controller;
    Address contract;
    std::optional<Address> via;

    bool operator==(const TrailEntry&) const = default;
};

/// Subject-side record of who received which data. Plaintext and nonces
/// stay here, off chain.
class ProvenanceGraph {
public:
    ProvenanceGraph() = default;
    explicit ProvenanceGraph(std::string subject) : subject_(std::move(subject)) {}

    /// Adds grants for a recipient. Re-granting the same reference is a no-op.
    void record_transfer(const Address& recipient, RecipientRole role, const Address& contract, const Nonce& nonce,
                         const std::vector<DataInstance>& data, const Hash32& tx_hash,
                         std::optional<Address> parent = std::nullopt)
    {
        if (role == RecipientRole::processor) {
            if (!parent) throw GraphError("processor entry " + recipient.hex() + " needs a controller parent");
            auto p = find(*parent);
            if (!p) throw GraphError("parent " + parent->hex() + " is not in the provenance graph");
        } else if (parent) {
            throw GraphError("controller entries have no parent");
        }
        auto* e = find(recipient);
        if (!e) {
            entries_.push_back({recipient, role, contract, nonce, {}, parent});
            e = &entries_.back();
        } else if (e->role != role || e->parent != parent) {
            throw GraphError("recipient " + recipient.hex() + " already recorded with a different role or parent");
        }
        for (const auto& d : data) {
            auto ref = commit(d, e->nonce);
            bool dup = std::any_of(e->grants.begin(), e->grants.end(), [&](const Grant& g) { return g.reference == ref; });
            if (dup) continue;
            e->grants.push_back({ref, d, tx_hash, next_sequence_++});
        }
    }

    /// Recipients holding a reference for `path`, in grant order.
    std::vector<TrailEntry> audit_trail(std::string_view path) const
    {
        std::vector<std::pair<std::uint64_t, TrailEntry>> hits;
        for (const auto& e : entries_) {
            std::optional<std::uint64_t> first;
            for (const auto& g : e.grants)
                if (g.plaintext.path == path && (!first || g.sequence < *first)) first = g.sequence;
            if (first) hits.push_back({*first, {e.recipient, e.role, e.contract, e.parent}});
        }
        std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<TrailEntry> out;
        for (auto& [_, t] : hits) out.push_back(std::move(t));
        return out;
    }

    /// Every stored reference recomputes from its plaintext and nonce.
    bool consistent() const
    {
        for (const auto& e : entries_)
            for (const auto& g : e.grants)
                if (!verify_commitment(g.plaintext, e.nonce, g.reference)) return false;
        return true;
    }

    const RecipientEntry* entry(const Address& recipient) const
    {
        for (const auto& e : entries_)
            if (e.recipient == recipient) return &e;
        return nullptr;
    }

    const std::vector<RecipientEntry>& entries() const noexcept { return entries_; }
    const std::string& subject() const noexcept { return subject_; }

    nlohmann::json to_json() const
    {
        nlohmann::json entries = nlohmann::json::array();
        for (const auto& e : entries_) {
            nlohmann::json grants = nlohmann::json::array();
            for (const auto& g : e.grants)
                grants.push_back({{"path", g.plaintext.path},
                                  {"value", g.plaintext.value},
                                  {"instantiationDigest", g.reference.instantiation.hex()},
                                  {"valueDigest", g.reference.value.hex()},
                                  {"txHash", g.tx_hash.hex()},
                                  {"sequence", g.sequence}});
            entries.push_back({{"recipient", e.recipient.hex()},
                               {"role", to_string(e.role)},
                               {"contract", e.contract.hex()},
                               {"nonce", e.nonce.hex()},
                               {"parent", e.parent ? nlohmann::json(e.parent->hex()) : nlohmann::json(nullptr)},
                               {"grants", grants}});
        }
        return {{"subject", subject_}, {"nextSequence", next_sequence_}, {"entries", entries}};
    }

    static ProvenanceGraph from_json(const nlohmann::json& j)
    {
        ProvenanceGraph g;
        try {
            g.subject_ = j.at("subject").get<std::string>();
            g.next_sequence_ = j.at("nextSequence").get<std::uint64_t>();
            for (const auto& je : j.at("entries")) {
                RecipientEntry e;
                e.recipient = Address::from_hex(je.at("recipient").get<std::string>());
                auto role = je.at("role").get<std::string>();
                if (role != "controller" && role != "processor") throw GraphError("unknown role " + role);
                e.role = role == "controller" ? RecipientRole::controller : RecipientRole::processor;
                e.contract = Address::from_hex(je.at("contract").get<std::string>());
                e.nonce = Nonce::from_hex(je.at("nonce").get<std::string>());
                if (!je.at("parent").is_null()) e.parent = Address::from_hex(je.at("parent").get<std::string>());
                for (const auto& jg : je.at("grants")) {
                    Grant gr;
                    gr.plaintext = {jg.at("path").get<std::string>(), jg.at("value").get<std::string>()};
                    gr.reference = {Hash32::from_hex(jg.at("instantiationDigest").get<std::string>()),
                                    Hash32::from_hex(jg.at("valueDigest").get<std::string>())};
                    gr.tx_hash = Hash32::from_hex(jg.at("txHash").get<std::string>());
                    gr.sequence = jg.at("sequence").get<std::uint64_t>();
                    e.grants.push_back(std::move(gr));
                }
                g.entries_.push_back(std::move(e));
            }
        } catch (const nlohmann::json::exception& ex) {
            throw GraphError(std::string("malformed provenance graph: ") + ex.what());
        }
        if (!g.consistent()) throw GraphError("provenance graph contains a reference that does not recompute");
        return g;
    }

    void save(const std::string& path) const
    {
        std::ofstream out(path);
        if (!out) throw Error("cannot write " + path);
        out << to_json().dump(2) << '\n';
    }

    static ProvenanceGraph load(const std::string& path)
    {
        std::ifstream in(path);
        if (!in) throw Error("cannot read " + path);
        try {
            return from_json(nlohmann::json::parse(in));
        } catch (const nlohmann::json::parse_error& e) {
            throw GraphError(std::string("malformed provenance graph: ") + e.what());
        }
    }

    bool operator==(const ProvenanceGraph&) const = default;

private:
    std::string subject_;
    std::vector<RecipientEntry> entries_;
    std::uint64_t next_sequence_ = 0;

    RecipientEntry* find(const Address& a)
    {
        for (auto& e : entries_)
            if (e.recipient == a) return &e;
        return nullptr;
    }
};

} // namespace dacc::provenance
