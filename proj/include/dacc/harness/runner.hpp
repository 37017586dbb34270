#pragma once

#include <random>

#include "dacc/harness/audit.hpp"
#include "dacc/harness/gas_report.hpp"
#include "dacc/harness/scenario.hpp"
#include "dacc/ledger/chain_io.hpp"
#include "dacc/policy/printer.hpp"
#include "dacc/policy/template.hpp"
#include "dacc/provenance/graph.hpp"

namespace dacc::harness {

/// Compiled contract and reference interpreter disagreed.
class OracleMismatch : public Error {
public:
    using Error::Error;
};

/// A subject transaction was not included within the inclusion deadline.
class CensorshipDetected : public Error {
public:
    using Error::Error;
};

/// A step could not be carried out (revert, failed expectation, bad reference).
class StepFailed : public Error {
public:
    using Error::Error;
};

struct DecisionEntry {
    std::size_t step = 0;
    Tick tick = 0;
    std::string contract; // alias
    contracts::UsageKind kind = contracts::UsageKind::notify;
    std::string event;
    policy::ActionKind decision = policy::ActionKind::deny;
    policy::ActionKind oracle = policy::ActionKind::deny;
    bool performed = false;
};

enum class ContractKind : std::uint8_t { subject, controller };

/// Harness-side bookkeeping for one deployed contract.
struct ContractState {
    std::string alias;
    ContractKind kind = ContractKind::subject;
    Address address;
    std::string owner;        // subject actor id, or controller actor id for controller contracts
    std::string counterpart;  // controller or processor actor id (subject contracts)
    std::string relationship; // alias of the contract that opened this subject-counterpart relationship
    crypto::KeyPair identity; // subject-side identity used for this relationship
    Nonce nonce;
    policy::Mechanism mechanism;
    std::vector<policy::DeadlineObligation> obligations;
    std::string policy_text; // canonical plaintext document
    Tick start_tick = 0;
    std::vector<provenance::DataInstance> data;
    std::optional<policy::ReferenceInterpreter> oracle;
    std::vector<bool> obligation_reported;
    std::vector<policy::TimedEvent> notified; // every notified event, decision aside; fulfils obligations
    std::vector<DisclosedEvent> events;
    bool active = true;
};

struct RunResult {
    std::string scenario;
    std::uint64_t seed = 0;
    std::unique_ptr<ledger::Ledger> ledger;
    std::map<std::string, provenance::ProvenanceGraph> graphs; // by subject actor id
    GasReport gas;
    std::vector<DecisionEntry> decisions;
    std::vector<Observation> observations;
    std::map<std::string, ContractState> contracts; // by alias
    std::vector<std::pair<std::uint64_t, std::uint64_t>> tampered; // (block, byte offset)

    const ContractState& contract(const std::string& alias) const
    {
        auto it = contracts.find(alias);
        if (it == contracts.end()) throw InvalidArgument("no contract '" + alias + "' in this run");
        return it->second;
    }

    /// Full honest disclosure of every subject contract plus all observations.
    AuditBundle audit_bundle() const
    {
        AuditBundle b;
        b.chain_head = ledger->head().block_hash;
        for (const auto& [alias, c] : contracts) {
            if (c.kind != ContractKind::subject) continue;
            b.disclosures.push_back({c.address, c.nonce, c.data, c.policy_text, c.events});
        }
        b.observations = observations;
        return b;
    }

    ledger::ChainFile chain_file() const { return ledger::export_chain(*ledger); }
};

namespace detail {

class Runner {
public:
    Runner(const Scenario& s, std::uint64_t seed) : s_(s), rng_(seed)
    {
        out_.scenario = s.name;
        out_.seed = seed;
        out_.gas = GasReport(s.price);
        out_.ledger = std::make_unique<ledger::Ledger>(s.chain.config, contracts::make_registry(s.code_sizes));
        if (s.censor_withdrawals) {
            auto sel = ledger::abi::selector("deactivate");
            out_.ledger->set_censor([sel](const ledger::Transaction& tx) {
                return tx.target && tx.payload.size() >= sel.size() &&
                       std::equal(sel.begin(), sel.end(), tx.payload.begin());
            });
        }
        for (const auto& a : s.actors) {
            keys_.emplace(a.id, crypto::KeyPair::from_seed(a.seed));
            if (a.role == ActorRole::subject) out_.graphs.emplace(a.id, provenance::ProvenanceGraph(a.id));
        }
    }

    RunResult run() &&
    {
        for (std::size_t i = 0; i < s_.steps.size(); ++i) {
            step_index_ = i;
            const auto& st = s_.steps[i];
            step_gas_ = 0;
            step_txs_ = 0;
            try {
                dispatch(st);
            } catch (const OracleMismatch&) {
                throw;
            } catch (const CensorshipDetected&) {
                throw;
            } catch (const StepFailed&) {
                throw;
            } catch (const Error& e) {
                throw StepFailed(where(st) + ": " + e.what());
            }
            if (!st.label.empty()) out_.gas.add({st.label, step_gas_, std::max<std::uint64_t>(step_txs_, 1), st.baseline_gas});
        }
        return std::move(out_);
    }

private:
    const Scenario& s_;
    std::mt19937_64 rng_;
    RunResult out_;
    std::map<std::string, crypto::KeyPair> keys_;
    std::map<std::string, std::uint32_t> identity_counter_;
    std::map<std::string, crypto::KeyPair> member_keys_; // join identities by "subject|alias|i"
    std::size_t step_index_ = 0;
    std::uint64_t step_gas_ = 0;
    std::uint64_t step_txs_ = 0;

    std::string where(const Step& st) const
    {
        return "step " + std::to_string(step_index_) + " (" + std::string(to_string(st.kind)) + " @" +
               std::to_string(st.tick) + (st.label.empty() ? "" : ", " + st.label) + ")";
    }

    Hash32 random_word()
    {
        Hash32 h;
        for (std::size_t i = 0; i < 32; i += 8) {
            auto v = rng_();
            for (std::size_t k = 0; k < 8; ++k) h.bytes[i + k] = static_cast<std::uint8_t>(v >> (8 * k));
        }
        return h;
    }

    Nonce random_nonce() { return Nonce::from_span(random_word().bytes); }

    const crypto::KeyPair& key(const std::string& actor) const { return keys_.at(actor); }

    crypto::KeyPair fresh_identity(const std::string& subject)
    {
        auto n = identity_counter_[subject]++;
        return crypto::KeyPair::from_seed(s_.actor(subject)->seed + "/identity/" + std::to_string(n));
    }

    ContractState& contract(const std::string& alias, const Step& st)
    {
        auto it = out_.contracts.find(alias);
        if (it == out_.contracts.end()) throw StepFailed(where(st) + ": contract '" + alias + "' was never deployed");
        return it->second;
    }

    ledger::Ledger& chain() { return *out_.ledger; }

    void seal(Tick tick)
    {
        auto& l = chain();
        auto t = std::max(l.head().timestamp + l.config().block_interval, tick * s_.chain.tick_seconds);
        l.seal_block(t);
    }

    struct Call {
        const crypto::KeyPair* key;
        std::optional<Address> target;
        Bytes payload;
        std::uint64_t gas_limit = 0; // 0: the block gas limit
    };

    static constexpr std::uint64_t membership_gas_limit = 100'000;

    /// Submits, seals until the pool drains and returns receipts in order.
    /// A subject transaction counts as censored when it is missing or lands
    /// more than the inclusion deadline after its predecessor in the batch;
    /// plain FIFO backlog is therefore not reported.
    std::vector<ledger::Receipt> execute(const std::vector<Call>& calls, Tick tick, const Step& st,
                                         bool subject_tx, bool require_success = true)
    {
        auto& l = chain();
        std::vector<Hash32> hashes;
        auto previous = l.head().number;
        for (const auto& c : calls) {
            auto tx = ledger::sign_transaction(*c.key, l.next_nonce(c.key->address()), c.target, c.payload,
                                               c.gas_limit ? c.gas_limit : l.config().block_gas_limit);
            hashes.push_back(l.submit(tx));
        }
        // every transaction fits an empty block, so the pool drains within one block per call
        for (std::size_t i = 0; l.pending_count() > 0 && i <= calls.size(); ++i) seal(tick);
        std::vector<ledger::Receipt> out;
        for (const auto& h : hashes) {
            auto rc = l.receipt(h);
            auto block = l.block_of(h);
            if (!rc || *block > previous + s_.chain.inclusion_deadline_blocks) {
                if (subject_tx)
                    throw CensorshipDetected(where(st) + ": subject transaction " + h.hex() + " was not included within " +
                                             std::to_string(s_.chain.inclusion_deadline_blocks) + " blocks");
                throw StepFailed(where(st) + ": transaction " + h.hex() + " was dropped");
            }
            previous = *block;
            step_gas_ += rc->gas_used;
            ++step_txs_;
            if (require_success && !rc->ok())
                throw StepFailed(where(st) + ": transaction " + std::string(ledger::to_string(rc->status)) + ": " +
                                 rc->revert_reason());
            out.push_back(std::move(*rc));
        }
        return out;
    }

    ledger::Receipt execute_one(const crypto::KeyPair& k, std::optional<Address> target, Bytes payload, Tick tick,
                                const Step& st, bool subject_tx)
    {
        return execute({{&k, target, std::move(payload)}}, tick, st, subject_tx).front();
    }

    void dispatch(const Step& st)
    {
        switch (st.kind) {
        case StepKind::deploy: deploy(st); break;
        case StepKind::deploy_controller: deploy_controller(st); break;
        case StepKind::grant_data: grant_data(st); break;
        case StepKind::usage_event: usage_event(st); break;
        case StepKind::transfer: transfer(st); break;
        case StepKind::time_step: time_step(st); break;
        case StepKind::join: join_or_leave(st, true); break;
        case StepKind::leave: join_or_leave(st, false); break;
        case StepKind::bulk_event: bulk_event(st); break;
        case StepKind::add_child: add_child(st); break;
        case StepKind::withdraw: withdraw(st); break;
        case StepKind::tamper: tamper(st); break;
        }
    }

    // Mechanism and obligations for a subject contract from a policy file.
    std::pair<policy::Mechanism, std::vector<policy::DeadlineObligation>> concrete_policy(const std::string& path,
                                                                                          const Step& st)
    {
        const auto& doc = s_.policy_file(path).document;
        const auto& first = doc.policies.front();
        policy::Mechanism m;
        if (const auto* mech = std::get_if<policy::Mechanism>(&first))
            m = *mech;
        else
            m = policy::instantiate(std::get<policy::MechanismTemplate>(first), st.bindings);
        return {m, doc.obligations};
    }

    std::vector<provenance::DataInstance> pick_data(const std::string& subject, const std::vector<std::string>& paths)
    {
        std::vector<provenance::DataInstance> out;
        const auto* a = s_.actor(subject);
        for (const auto& p : paths)
            for (const auto& d : a->data)
                if (d.path == p) out.push_back(d);
        return out;
    }

    /// Deploys a subject contract from `identity` and registers it under `alias`.
    ContractState& deploy_subject(const Step& st, const std::string& alias, const std::string& subject,
                                  const std::string& counterpart, crypto::KeyPair identity, const Nonce& nonce,
                                  policy::Mechanism mech, std::vector<policy::DeadlineObligation> obligations,
                                  std::vector<provenance::DataInstance> data, std::optional<Address> parent,
                                  const std::string& relationship, Hash32& tx_hash)
    {
        const auto& counter_key = key(counterpart);
        contracts::SubjectInit init;
        auto& t = init.terms;
        t.subject = identity.address();
        t.controller = counter_key.address();
        t.sealed_nonce = crypto::seal(nonce.bytes, counter_key.public_key(), random_word());
        t.policy = compiler::compile(mech, nonce);
        for (const auto& o : obligations) t.obligations.push_back(compiler::compile(o, nonce));
        t.mode = st.mode;
        t.parent = parent;
        t.join_mode = st.join_mode;
        t.start_tick = st.tick;
        for (const auto& d : data) init.data_refs.push_back(provenance::commit(d, nonce));

        // the counterpart must be able to recover the nonce
        auto opened = counter_key.open_sealed(t.sealed_nonce);
        if (!opened || Nonce::from_span(*opened) != nonce)
            throw StepFailed(where(st) + ": counterpart cannot open the sealed nonce");

        auto rc = execute_one(identity, std::nullopt,
                              ledger::abi::encode_create(contracts::SubjectContract::blueprint_name, init.encode()),
                              st.tick, st, true);
        tx_hash = rc.tx_hash;

        ContractState c;
        c.alias = alias;
        c.kind = ContractKind::subject;
        c.address = *rc.created_address;
        c.owner = subject;
        c.counterpart = counterpart;
        c.relationship = relationship.empty() ? alias : relationship;
        c.identity = std::move(identity);
        c.nonce = nonce;
        c.policy_text = policy::to_text(policy::PolicyDocument{{mech}, obligations});
        c.mechanism = std::move(mech);
        c.obligations = std::move(obligations);
        c.obligation_reported.assign(c.obligations.size(), false);
        c.start_tick = st.tick;
        c.data = std::move(data);
        c.oracle.emplace(c.mechanism);
        c.oracle->advance(st.tick);
        auto [it, fresh] = out_.contracts.emplace(alias, std::move(c));
        if (!fresh) throw StepFailed(where(st) + ": contract alias '" + alias + "' reused");
        return it->second;
    }

    void deploy(const Step& st)
    {
        auto [mech, obligations] = concrete_policy(st.policy, st);
        std::optional<Address> parent;
        if (!st.parent.empty()) parent = contract(st.parent, st).address;
        auto nonce = random_nonce();
        Hash32 tx;
        auto& c = deploy_subject(st, st.alias, st.subject, st.controller, fresh_identity(st.subject), nonce, mech,
                                 obligations, pick_data(st.subject, st.data), parent, "", tx);
        out_.graphs.at(st.subject).record_transfer(key(st.controller).address(), provenance::RecipientRole::controller,
                                                   c.address, nonce, c.data, tx);
    }

    void grant_data(const Step& st)
    {
        auto& p = contract(st.contract, st);
        Hash32 tx;
        auto data = pick_data(p.owner, st.data);
        auto parent_addr = p.address;
        auto identity = p.identity;
        auto subject = p.owner, counterpart = p.counterpart, relationship = p.relationship;
        auto nonce = p.nonce;
        auto& c = deploy_subject(st, st.alias, subject, counterpart, identity, nonce, p.mechanism, p.obligations, data,
                                 parent_addr, relationship, tx);
        execute_one(c.identity, parent_addr, ledger::abi::encode_call("addChildContract", contracts::args::address(c.address)),
                    st.tick, st, true);
        auto role = s_.actor(counterpart)->role == ActorRole::processor ? provenance::RecipientRole::processor
                                                                        : provenance::RecipientRole::controller;
        auto& graph = out_.graphs.at(subject);
        const auto* entry = graph.entry(key(counterpart).address());
        graph.record_transfer(key(counterpart).address(), role, entry ? entry->contract : c.address, nonce, data, tx,
                              entry ? entry->parent : std::nullopt);
    }

    void check_obligations(ContractState& c, const ledger::Receipt& rc, Tick tick, const Step& st)
    {
        for (std::size_t i = 0; i < c.obligations.size(); ++i) {
            bool expected = !c.obligation_reported[i] &&
                            policy::obligation_violated(c.obligations[i], c.start_tick, c.notified, tick);
            bool logged = std::any_of(rc.logs.begin(), rc.logs.end(), [&](const ledger::LogEvent& l) {
                return l.topics.size() == 2 && l.topics[0] == contracts::topics::violation() &&
                       l.topics[1] == u64_word(i);
            });
            if (expected != logged)
                throw OracleMismatch(where(st) + ": obligation '" + c.obligations[i].name + "' of " + c.alias +
                                     (logged ? " reported violated by the contract but not by the oracle"
                                             : " violated per the oracle but not reported by the contract"));
            if (logged) c.obligation_reported[i] = true;
        }
    }

    std::string trace(const ContractState& c) const
    {
        std::string out;
        for (const auto& e : c.events) out += "\n    @" + std::to_string(e.tick) + " " + e.event;
        return out;
    }

    void check_decision(const ContractState& c, const Step& st, policy::ActionKind chain, policy::ActionKind oracle)
    {
        if (chain != oracle)
            throw OracleMismatch(where(st) + ": contract " + c.alias + " decided " + std::string(policy::to_string(chain)) +
                                 " but the reference interpreter decided " + std::string(policy::to_string(oracle)) +
                                 " for " + st.event + "; usage so far:" + trace(c));
        if (st.expect && *st.expect != chain)
            throw StepFailed(where(st) + ": expected " + std::string(policy::to_string(*st.expect)) + ", got " +
                             std::string(policy::to_string(chain)));
    }

    void usage_event(const Step& st)
    {
        auto& c = contract(st.contract, st);
        auto e = policy::parse_event(st.event);
        auto obf = compiler::obfuscate(e, c.nonce);
        auto rc = execute_one(key(c.counterpart), c.address,
                              ledger::abi::encode_call("notifyEvent", contracts::args::event_at(obf, st.tick)), st.tick,
                              st, false);
        auto decision = contracts::decode_decision(rc.return_value);
        c.events.push_back({st.tick, policy::to_text(e)});
        auto oracle = c.oracle->notify(e, st.tick).kind;
        c.notified.push_back({st.tick, e});
        check_decision(c, st, decision, oracle);
        check_obligations(c, rc, st.tick, st);
        bool duty = std::any_of(c.obligations.begin(), c.obligations.end(),
                                [&](const policy::DeadlineObligation& o) { return policy::matches(o.fulfil, e); });
        bool performed = decision != policy::ActionKind::deny || duty || st.perform_despite_deny;
        if (performed) out_.observations.push_back({c.address, st.tick, policy::to_text(e)});
        out_.decisions.push_back({step_index_, st.tick, c.alias, contracts::UsageKind::notify, policy::to_text(e),
                                  decision, oracle, performed});
    }

    void transfer(const Step& st)
    {
        auto& c = contract(st.contract, st);
        const auto& processor = key(st.processor);
        auto e = policy::parse_event(st.event);
        auto obf = compiler::obfuscate(e, c.nonce);
        auto sealed = crypto::seal(processor.address().bytes, c.identity.public_key(), random_word());
        auto rc = execute_one(key(c.counterpart), c.address,
                              ledger::abi::encode_call("requestTransfer", contracts::args::transfer(obf, sealed, st.tick)),
                              st.tick, st, false);
        auto decision = contracts::decode_decision(rc.return_value);
        c.events.push_back({st.tick, policy::to_text(e)});
        auto oracle = c.oracle->probe(e, st.tick).kind;
        if (oracle == policy::ActionKind::allow) {
            c.oracle->record(e, st.tick);
            c.notified.push_back({st.tick, e});
        } else
            c.oracle->advance(st.tick);
        check_decision(c, st, decision, oracle);
        check_obligations(c, rc, st.tick, st);
        bool performed = decision == policy::ActionKind::allow || st.perform_despite_deny;
        if (performed) out_.observations.push_back({c.address, st.tick, policy::to_text(e)});
        out_.decisions.push_back({step_index_, st.tick, c.alias, contracts::UsageKind::transfer, policy::to_text(e),
                                  decision, oracle, performed});
        if (decision != policy::ActionKind::allow) return;

        // the subject learns the processor from the sealed log and opens a new relationship
        auto log = std::find_if(rc.logs.begin(), rc.logs.end(), [](const ledger::LogEvent& l) {
            return !l.topics.empty() && l.topics[0] == contracts::topics::transfer();
        });
        if (log == rc.logs.end()) throw StepFailed(where(st) + ": allowed transfer emitted no TransferEvent");
        ByteReader r(log->data);
        r.u64();
        auto opened = c.identity.open_sealed(r.bytes());
        if (!opened || Address::from_span(*opened) != processor.address())
            throw StepFailed(where(st) + ": subject cannot recover the processor address");

        auto mech = c.mechanism;
        auto obligations = c.obligations;
        if (!st.policy.empty()) std::tie(mech, obligations) = concrete_policy(st.policy, st);
        auto data = st.data.empty() ? c.data : pick_data(c.owner, st.data);
        auto nonce = random_nonce();
        auto subject = c.owner;
        auto parent = c.address;
        auto controller_addr = key(c.counterpart).address();
        Hash32 tx;
        auto& p = deploy_subject(st, st.alias, subject, st.processor, fresh_identity(subject), nonce, mech, obligations,
                                 data, parent, "", tx);
        out_.graphs.at(subject).record_transfer(processor.address(), provenance::RecipientRole::processor, p.address,
                                                nonce, p.data, tx, controller_addr);
    }

    void time_step(const Step& st)
    {
        auto& c = contract(st.contract, st);
        const auto& k = st.caller == "subject" ? c.identity : key(c.counterpart);
        auto rc = execute_one(k, c.address, ledger::abi::encode_call("notifyTimeStep", contracts::args::tick(st.tick)),
                              st.tick, st, st.caller == "subject");
        c.oracle->advance(st.tick);
        check_obligations(c, rc, st.tick, st);
    }

    const crypto::KeyPair& member_key(const std::string& subject, const std::string& alias, std::uint32_t i)
    {
        auto id = subject + "|" + alias + "|" + std::to_string(i);
        auto it = member_keys_.find(id);
        if (it == member_keys_.end())
            it = member_keys_.emplace(id, crypto::KeyPair::from_seed(s_.actor(subject)->seed + "/member/" + alias + "/" +
                                                                    std::to_string(i)))
                     .first;
        return it->second;
    }

    void join_or_leave(const Step& st, bool join)
    {
        auto& c = contract(st.contract, st);
        std::vector<Call> calls;
        Bytes args;
        if (join && st.restricted) args = {1};
        for (std::uint32_t i = 0; i < st.count; ++i)
            calls.push_back({&member_key(st.subject, c.alias, i), c.address,
                             ledger::abi::encode_call(join ? "join" : "leave", args), membership_gas_limit});
        execute(calls, st.tick, st, true);
    }

    void deploy_controller(const Step& st)
    {
        contracts::ControllerInit init{key(st.controller).address(), s_.policy_file(st.policy).text, st.join_mode,
                                       std::nullopt};
        if (!st.parent.empty()) init.parent = contract(st.parent, st).address;
        auto rc = execute_one(key(st.controller), std::nullopt,
                              ledger::abi::encode_create(contracts::ControllerContract::blueprint_name, init.encode()),
                              st.tick, st, false);
        ContractState c;
        c.alias = st.alias;
        c.kind = ContractKind::controller;
        c.address = *rc.created_address;
        c.owner = st.controller;
        c.policy_text = init.template_text;
        c.start_tick = st.tick;
        out_.contracts.emplace(st.alias, std::move(c));
    }

    void bulk_event(const Step& st)
    {
        auto& c = contract(st.contract, st);
        std::vector<Hash32> params;
        for (const auto& [k, v] : st.params) params.push_back(crypto::sha3_256(k + "=" + v));
        execute_one(key(c.owner), c.address,
                    ledger::abi::encode_call("logBulkEvent", contracts::args::bulk(st.template_index, params, st.tick)),
                    st.tick, st, false);
    }

    void add_child(const Step& st)
    {
        auto& c = contract(st.contract, st);
        auto& child = contract(st.child, st);
        const crypto::KeyPair* k = nullptr;
        if (c.kind == ContractKind::controller)
            k = &key(c.owner);
        else
            k = st.caller == "subject" ? &c.identity : &key(c.counterpart);
        execute_one(*k, c.address, ledger::abi::encode_call("addChildContract", contracts::args::address(child.address)),
                    st.tick, st, c.kind == ContractKind::subject && st.caller == "subject");
    }

    void withdraw(const Step& st)
    {
        auto& c = contract(st.contract, st);
        execute_one(c.identity, c.address, ledger::abi::encode_call("deactivate"), st.tick, st, true);
        c.active = false;
    }

    void tamper(const Step& st)
    {
        auto& blocks = chain().mutable_blocks();
        if (st.tamper_block >= blocks.size()) throw StepFailed(where(st) + ": no block " + std::to_string(st.tamper_block));
        auto& b = blocks[st.tamper_block];
        auto offset = st.tamper_offset % ledger::tamperable_size(b);
        ledger::tamper_byte(b, offset, 0x01);
        out_.tampered.emplace_back(st.tamper_block, offset);
    }
};

} // namespace detail

/// Runs a scenario end to end. Every usage decision is cross-checked
/// against the reference interpreter; a disagreement throws OracleMismatch.
inline RunResult run_scenario(const Scenario& s, std::optional<std::uint64_t> seed = std::nullopt)
{
    return detail::Runner(s, seed.value_or(s.seed)).run();
}

/// Digests a contract exposes on chain: policy digests, data references and
/// usage-record digests.
inline std::set<Hash32> on_chain_digests(const ledger::Ledger& l, const Address& contract)
{
    std::set<Hash32> out;
    const auto* inst = l.contract(contract);
    if (!inst || inst->blueprint != contracts::SubjectContract::blueprint_name) return out;
    auto terms = contracts::SubjectTerms::decode(inst->code);
    auto add_pattern = [&](const compiler::ObfuscatedPattern& p) {
        out.insert(p.activity);
        for (const auto& a : p.attributes) {
            out.insert(a.name);
            if (a.value) out.insert(*a.value);
        }
    };
    add_pattern(terms.policy.trigger);
    for (const auto& n : terms.policy.nodes)
        if (n.kind != compiler::NodeKind::negation && n.kind != compiler::NodeKind::conjunction &&
            n.kind != compiler::NodeKind::disjunction && n.kind != compiler::NodeKind::within)
            add_pattern(n.pattern);
    for (const auto& o : terms.obligations) add_pattern(o.fulfil);
    for (const auto& [k, v] : inst->storage)
        if (k.bytes[0] == static_cast<std::uint8_t>(compiler::Region::data_refs) && k != contracts::SubjectContract::ref_count_key())
            out.insert(v);
    for (const auto& lg : l.get_logs({contract, std::nullopt, std::nullopt, std::nullopt})) {
        if (lg.topics.empty()) continue;
        if (lg.topics[0] == contracts::topics::data_reference()) {
            ByteReader r(lg.data);
            auto d = provenance::DataReference::decode(r);
            out.insert(d.instantiation);
            out.insert(d.value);
        } else if (auto u = contracts::UsageRecord::from_log(lg)) {
            out.insert(u->event.activity);
            for (const auto& [n, v] : u->event.attributes) {
                out.insert(n);
                out.insert(v);
            }
        }
    }
    return out;
}

/// Checks that one subject's relationships with different counterparts
/// cannot be linked on chain: distinct deploying identities and no shared
/// digest. Returns a description of every problem found.
inline std::vector<std::string> unlinkability_findings(const RunResult& r)
{
    std::vector<std::string> out;
    std::map<std::string, std::map<std::string, std::vector<const ContractState*>>> by_subject; // subject -> relationship
    for (const auto& [alias, c] : r.contracts)
        if (c.kind == ContractKind::subject) by_subject[c.owner][c.relationship].push_back(&c);
    for (const auto& [subject, rels] : by_subject) {
        std::map<Address, std::string> identities;
        std::map<Hash32, std::string> digests;
        for (const auto& [rel, cs] : rels) {
            auto id = cs.front()->identity.address();
            if (auto [it, fresh] = identities.emplace(id, rel); !fresh)
                out.push_back(subject + ": relationships " + it->second + " and " + rel + " share identity " + id.hex());
            std::set<Hash32> mine;
            for (const auto* c : cs) {
                auto d = on_chain_digests(*r.ledger, c->address);
                mine.insert(d.begin(), d.end());
            }
            for (const auto& d : mine)
                if (auto [it, fresh] = digests.emplace(d, rel); !fresh)
                    out.push_back(subject + ": digest " + d.hex() + " appears in relationships " + it->second + " and " + rel);
        }
    }
    return out;
}

} // namespace dacc::harness
