#pragma once

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "dacc/compiler/compile.hpp"
#include "dacc/compiler/engine.hpp"
#include "dacc/contracts/registry.hpp"
#include "dacc/ledger/verify.hpp"
#include "dacc/policy/interpreter.hpp"
#include "dacc/policy/parser.hpp"

namespace dacc::harness {

/// Plaintext of one on-chain usage record, in log order.
struct DisclosedEvent {
    policy::Tick tick = 0;
    std::string event;
    bool operator==(const DisclosedEvent&) const = default;
};

/// What a controller reveals about one subject contract on request.
struct Disclosure {
    Address contract;
    Nonce nonce;
    std::vector<provenance::DataInstance> data;
    std::string policy; // plaintext policy document
    std::vector<DisclosedEvent> events;
    bool operator==(const Disclosure&) const = default;
};

/// An activity the subject saw happen off chain (e.g. a message received).
struct Observation {
    Address contract;
    policy::Tick tick = 0;
    std::string event;
    bool operator==(const Observation&) const = default;
};

struct AuditBundle {
    Hash32 chain_head;
    std::vector<Disclosure> disclosures;
    std::vector<Observation> observations;

    bool operator==(const AuditBundle&) const = default;

    nlohmann::json to_json() const
    {
        nlohmann::json ds = nlohmann::json::array();
        for (const auto& d : disclosures) {
            nlohmann::json data = nlohmann::json::array();
            for (const auto& i : d.data) data.push_back({{"path", i.path}, {"value", i.value}});
            nlohmann::json events = nlohmann::json::array();
            for (const auto& e : d.events) events.push_back({{"tick", e.tick}, {"event", e.event}});
            ds.push_back({{"contract", d.contract.hex()},
                          {"nonce", d.nonce.hex()},
                          {"data", data},
                          {"policy", d.policy},
                          {"events", events}});
        }
        nlohmann::json obs = nlohmann::json::array();
        for (const auto& o : observations)
            obs.push_back({{"contract", o.contract.hex()}, {"tick", o.tick}, {"event", o.event}});
        return {{"format", "dacc-audit/1"}, {"chainHead", chain_head.hex()}, {"disclosures", ds}, {"observations", obs}};
    }

    static AuditBundle from_json(const nlohmann::json& j)
    {
        AuditBundle b;
        try {
            if (j.at("format").get<std::string>() != "dacc-audit/1") throw DecodeError("unsupported audit bundle format");
            b.chain_head = Hash32::from_hex(j.at("chainHead").get<std::string>());
            for (const auto& jd : j.at("disclosures")) {
                Disclosure d;
                d.contract = Address::from_hex(jd.at("contract").get<std::string>());
                d.nonce = Nonce::from_hex(jd.at("nonce").get<std::string>());
                for (const auto& ji : jd.at("data"))
                    d.data.push_back({ji.at("path").get<std::string>(), ji.at("value").get<std::string>()});
                d.policy = jd.at("policy").get<std::string>();
                for (const auto& je : jd.at("events"))
                    d.events.push_back({je.at("tick").get<policy::Tick>(), je.at("event").get<std::string>()});
                b.disclosures.push_back(std::move(d));
            }
            for (const auto& jo : j.at("observations"))
                b.observations.push_back({Address::from_hex(jo.at("contract").get<std::string>()),
                                          jo.at("tick").get<policy::Tick>(), jo.at("event").get<std::string>()});
        } catch (const nlohmann::json::exception& e) {
            throw DecodeError(std::string("malformed audit bundle: ") + e.what());
        }
        return b;
    }

    void save(const std::filesystem::path& file) const
    {
        std::ofstream out(file);
        if (!out) throw Error("cannot write " + file.string());
        out << to_json().dump(2) << '\n';
    }

    static AuditBundle load(const std::filesystem::path& file)
    {
        std::ifstream in(file);
        if (!in) throw Error("cannot read " + file.string());
        try {
            return from_json(nlohmann::json::parse(in));
        } catch (const nlohmann::json::parse_error& e) {
            throw DecodeError(std::string("malformed audit bundle: ") + e.what());
        }
    }
};

enum class VerdictStatus : std::uint8_t { consistent, mismatch, violation };

inline std::string_view to_string(VerdictStatus s)
{
    switch (s) {
    case VerdictStatus::consistent: return "consistent";
    case VerdictStatus::mismatch: return "mismatch";
    case VerdictStatus::violation: return "violation";
    }
    return "?";
}

struct Verdict {
    std::optional<Address> contract;
    std::string item;
    VerdictStatus status = VerdictStatus::consistent;
    std::string detail;
};

struct AuditReport {
    bool chain_valid = false;
    std::string chain_problem;
    std::vector<Verdict> verdicts;

    std::size_t count(VerdictStatus s) const
    {
        return static_cast<std::size_t>(
            std::count_if(verdicts.begin(), verdicts.end(), [&](const Verdict& v) { return v.status == s; }));
    }

    bool clean() const { return chain_valid && count(VerdictStatus::consistent) == verdicts.size(); }

    nlohmann::json to_json() const
    {
        nlohmann::json vs = nlohmann::json::array();
        for (const auto& v : verdicts)
            vs.push_back({{"contract", v.contract ? nlohmann::json(v.contract->hex()) : nlohmann::json(nullptr)},
                          {"item", v.item},
                          {"verdict", to_string(v.status)},
                          {"detail", v.detail}});
        return {{"chainValid", chain_valid},
                {"chainProblem", chain_problem},
                {"consistent", count(VerdictStatus::consistent)},
                {"mismatches", count(VerdictStatus::mismatch)},
                {"violations", count(VerdictStatus::violation)},
                {"verdicts", vs}};
    }
};

namespace detail {

class Auditor {
public:
    Auditor(std::span<const ledger::Block> chain, const ledger::WorldState& state) : chain_(chain), state_(state) {}

    void disclosure(const Disclosure& d, AuditReport& out)
    {
        auto add = [&](std::string item, VerdictStatus s, std::string detail = {}) {
            out.verdicts.push_back({d.contract, std::move(item), s, std::move(detail)});
        };
        auto it = state_.contracts.find(d.contract);
        if (it == state_.contracts.end() || it->second.blueprint != contracts::SubjectContract::blueprint_name) {
            add("contract", VerdictStatus::mismatch, "no subject contract at this address");
            return;
        }
        const auto& inst = it->second;
        auto terms = contracts::SubjectTerms::decode(inst.code);
        auto logs = logs_of(d.contract);

        // data commitments
        std::set<provenance::DataReference> on_chain;
        if (terms.mode == contracts::StorageMode::state_variables) {
            auto slot = [&](const Hash32& k) {
                auto s = inst.storage.find(k);
                return s == inst.storage.end() ? Hash32{} : s->second;
            };
            auto n = word_u64(slot(contracts::SubjectContract::ref_count_key()));
            for (std::uint64_t i = 0; i < n; ++i)
                on_chain.insert({slot(contracts::SubjectContract::ref_key(2 * i)),
                                 slot(contracts::SubjectContract::ref_key(2 * i + 1))});
        } else {
            for (const auto& l : logs)
                if (!l.topics.empty() && l.topics[0] == contracts::topics::data_reference()) {
                    ByteReader r(l.data);
                    on_chain.insert(provenance::DataReference::decode(r));
                }
        }
        for (const auto& inst_data : d.data) {
            auto ref = provenance::commit(inst_data, d.nonce);
            if (on_chain.contains(ref))
                add("data " + inst_data.path, VerdictStatus::consistent);
            else
                add("data " + inst_data.path, VerdictStatus::mismatch,
                    "commitment for the disclosed value is not on chain");
        }

        // policy
        policy::PolicyDocument doc;
        const policy::Mechanism* mech = nullptr;
        try {
            doc = policy::parse_document(d.policy);
            if (!doc.policies.empty()) mech = std::get_if<policy::Mechanism>(&doc.policies.front());
        } catch (const Error& e) {
            add("policy", VerdictStatus::mismatch, std::string("disclosed policy does not parse: ") + e.what());
            return;
        }
        if (!mech) {
            add("policy", VerdictStatus::mismatch, "disclosed policy is not a concrete mechanism");
            return;
        }
        try {
            auto bp = compiler::compile(*mech, d.nonce);
            std::vector<compiler::CompiledObligation> obligations;
            for (const auto& o : doc.obligations) obligations.push_back(compiler::compile(o, d.nonce));
            if (bp.encode() != terms.policy.encode() || obligations != terms.obligations) {
                add("policy", VerdictStatus::mismatch, "disclosed policy does not compile to the on-chain policy");
                return;
            }
        } catch (const Error& e) {
            add("policy", VerdictStatus::mismatch, std::string("disclosed policy does not compile: ") + e.what());
            return;
        }
        add("policy", VerdictStatus::consistent);

        // decision replay
        std::vector<contracts::UsageRecord> records;
        for (const auto& l : logs)
            if (auto u = contracts::UsageRecord::from_log(l)) records.push_back(*u);
        replay(d, *mech, terms, records, add);

        for (const auto& l : logs)
            if (!l.topics.empty() && l.topics[0] == contracts::topics::violation()) {
                auto idx = word_u64(l.topics.size() > 1 ? l.topics[1] : Hash32{});
                ByteReader r(l.data);
                auto tick = r.u64();
                std::string name = idx < doc.obligations.size() ? doc.obligations[idx].name : std::to_string(idx);
                add("obligation " + name, VerdictStatus::violation,
                    "deadline missed, reported at tick " + std::to_string(tick));
            }
        records_[d.contract] = {std::move(records), d.nonce, terms.obligations};
    }

    void observation(const Observation& o, AuditReport& out)
    {
        auto add = [&](VerdictStatus s, std::string detail = {}) {
            out.verdicts.push_back({o.contract, "observed " + o.event + " @" + std::to_string(o.tick), s, std::move(detail)});
        };
        auto it = records_.find(o.contract);
        if (it == records_.end()) {
            add(VerdictStatus::mismatch, "no usable disclosure for this contract");
            return;
        }
        compiler::ObfuscatedEvent obf;
        try {
            obf = compiler::obfuscate(policy::parse_event(o.event), it->second.nonce);
        } catch (const Error& e) {
            add(VerdictStatus::mismatch, std::string("observation does not parse: ") + e.what());
            return;
        }
        // carrying out a duty is never a usage violation
        bool duty = std::any_of(it->second.obligations.begin(), it->second.obligations.end(),
                                [&](const compiler::CompiledObligation& ob) { return compiler::match_obfuscated(ob.fulfil, obf); });
        bool denied = false;
        for (const auto& r : it->second.records) {
            if (r.tick != o.tick || r.event != obf) continue;
            if (r.decision != policy::ActionKind::deny || duty) {
                add(VerdictStatus::consistent);
                return;
            }
            denied = true;
        }
        if (denied)
            add(VerdictStatus::violation, "activity performed although the contract denied it");
        else
            add(VerdictStatus::violation, "activity performed without an on-chain usage record");
    }

private:
    struct Known {
        std::vector<contracts::UsageRecord> records;
        Nonce nonce;
        std::vector<compiler::CompiledObligation> obligations;
    };

    std::span<const ledger::Block> chain_;
    const ledger::WorldState& state_;
    std::map<Address, Known> records_;

    std::vector<ledger::LogEvent> logs_of(const Address& a) const
    {
        std::vector<ledger::LogEvent> out;
        for (const auto& b : chain_)
            for (const auto& rc : b.receipts)
                for (const auto& l : rc.logs)
                    if (l.emitter == a) out.push_back(l);
        return out;
    }

    template <typename Add>
    static void replay(const Disclosure& d, const policy::Mechanism& mech, const contracts::SubjectTerms& terms,
                       const std::vector<contracts::UsageRecord>& records, Add&& add)
    {
        if (d.events.empty()) {
            // no plaintext events: replay the obfuscated log on the compiled policy
            compiler::CompiledPolicyRunner runner(terms.policy, terms.start_tick);
            for (std::size_t i = 0; i < records.size(); ++i) {
                const auto& r = records[i];
                auto got = step(runner, r);
                if (got != r.decision) {
                    add("decision #" + std::to_string(i), VerdictStatus::mismatch,
                        "log says " + std::string(policy::to_string(r.decision)) + ", policy gives " +
                            std::string(policy::to_string(got)));
                    return;
                }
            }
            add("decisions", VerdictStatus::consistent, std::to_string(records.size()) + " records replayed");
            return;
        }
        if (d.events.size() != records.size()) {
            add("decisions", VerdictStatus::mismatch,
                std::to_string(d.events.size()) + " events disclosed for " + std::to_string(records.size()) +
                    " usage records");
            return;
        }
        policy::ReferenceInterpreter oracle(mech);
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& r = records[i];
            const auto& de = d.events[i];
            policy::Event e;
            try {
                e = policy::parse_event(de.event);
            } catch (const Error& ex) {
                add("event #" + std::to_string(i), VerdictStatus::mismatch, ex.what());
                return;
            }
            if (de.tick != r.tick || compiler::obfuscate(e, d.nonce) != r.event) {
                add("event #" + std::to_string(i), VerdictStatus::mismatch,
                    "disclosed event does not match the on-chain usage record");
                return;
            }
            policy::ActionKind got;
            try {
                if (r.kind == contracts::UsageKind::notify) {
                    got = oracle.notify(e, r.tick).kind;
                } else {
                    got = oracle.probe(e, r.tick).kind;
                    if (got == policy::ActionKind::allow)
                        oracle.record(e, r.tick);
                    else
                        oracle.advance(r.tick);
                }
            } catch (const Error& ex) {
                add("decision #" + std::to_string(i), VerdictStatus::mismatch, ex.what());
                return;
            }
            if (got != r.decision) {
                add("decision #" + std::to_string(i), VerdictStatus::mismatch,
                    "log says " + std::string(policy::to_string(r.decision)) + ", disclosed policy gives " +
                        std::string(policy::to_string(got)));
                return;
            }
        }
        add("decisions", VerdictStatus::consistent, std::to_string(records.size()) + " records replayed");
    }

    static policy::ActionKind step(compiler::CompiledPolicyRunner& runner, const contracts::UsageRecord& r)
    {
        if (r.kind == contracts::UsageKind::notify) return runner.notify(r.event, r.tick);
        auto got = runner.probe(r.event, r.tick);
        if (got == policy::ActionKind::allow)
            runner.record(r.event, r.tick);
        else
            runner.advance(r.tick);
        return got;
    }
};

} // namespace detail

/// Supervisory audit: verifies the chain, then checks every disclosure
/// against it and every off-chain observation against the decision log.
inline AuditReport audit_verify(std::span<const ledger::Block> chain, const ledger::LedgerConfig& config,
                                const ledger::BlueprintRegistry& registry, const AuditBundle& bundle)
{
    AuditReport out;
    auto v = ledger::verify_chain(chain, config, registry);
    out.chain_valid = v.ok;
    if (!v.ok) {
        out.chain_problem = "block " + std::to_string(v.first_bad_block.value_or(0)) + ": " + v.reason;
        return out;
    }
    if (std::none_of(chain.begin(), chain.end(), [&](const ledger::Block& b) { return b.block_hash == bundle.chain_head; }))
        out.verdicts.push_back({std::nullopt, "chain head", VerdictStatus::mismatch,
                                "bundle refers to a block that is not on this chain"});
    detail::Auditor auditor(chain, v.final_state);
    for (const auto& d : bundle.disclosures) auditor.disclosure(d, out);
    for (const auto& o : bundle.observations) auditor.observation(o, out);
    return out;
}

} // namespace dacc::harness
