#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dacc/contracts/registry.hpp"
#include "dacc/ledger/ledger.hpp"
#include "dacc/policy/template.hpp"
#include "dacc/policy/parser.hpp"
#include "dacc/provenance/data_model.hpp"

namespace dacc::harness {

using policy::Tick;

/// Scenario validation failure; lists every problem found.
class ScenarioError : public Error {
public:
    explicit ScenarioError(std::vector<std::string> problems)
        : Error(join(problems)), problems_(std::move(problems))
    {
    }
    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    std::vector<std::string> problems_;

    static std::string join(const std::vector<std::string>& ps)
    {
        std::string out = "invalid scenario:";
        for (const auto& p : ps) out += "\n  - " + p;
        return out;
    }
};

enum class ActorRole : std::uint8_t { subject, controller, processor };

inline std::string_view to_string(ActorRole r)
{
    switch (r) {
    case ActorRole::subject: return "subject";
    case ActorRole::controller: return "controller";
    case ActorRole::processor: return "processor";
    }
    return "?";
}

struct Actor {
    std::string id;
    ActorRole role = ActorRole::subject;
    std::string seed;
    std::vector<provenance::DataInstance> data; // subjects only
};

enum class StepKind : std::uint8_t {
    deploy,
    deploy_controller,
    grant_data,
    usage_event,
    transfer,
    time_step,
    join,
    leave,
    bulk_event,
    add_child,
    withdraw,
    tamper,
};

inline constexpr std::array<std::pair<StepKind, std::string_view>, 12> step_names{{
    {StepKind::deploy, "deploy"},
    {StepKind::deploy_controller, "deployController"},
    {StepKind::grant_data, "grantData"},
    {StepKind::usage_event, "usageEvent"},
    {StepKind::transfer, "transfer"},
    {StepKind::time_step, "timeStep"},
    {StepKind::join, "join"},
    {StepKind::leave, "leave"},
    {StepKind::bulk_event, "bulkEvent"},
    {StepKind::add_child, "addChild"},
    {StepKind::withdraw, "withdraw"},
    {StepKind::tamper, "tamper"},
}};

inline std::string_view to_string(StepKind k)
{
    for (const auto& [kind, name] : step_names)
        if (kind == k) return name;
    return "?";
}

/// A loaded policy file: plaintext and parsed form.
struct PolicyFile {
    std::string path; // as written in the scenario
    std::string text;
    policy::PolicyDocument document;
};

/// One timeline entry. Which fields are meaningful depends on `kind`.
struct Step {
    StepKind kind = StepKind::deploy;
    Tick tick = 0;
    std::string label;
    std::optional<std::uint64_t> baseline_gas; // reference figure for the gas report

    std::string subject;    // actor id
    std::string controller; // actor id
    std::string processor;  // actor id
    std::string contract;   // contract alias the step acts on
    std::string alias;      // alias of a contract this step creates
    std::string child;      // child alias for addChild
    std::string parent;     // parent alias for deploy / deployController
    std::string policy;     // policy file path
    policy::Bindings bindings;
    std::vector<std::string> data; // data paths
    contracts::StorageMode mode = contracts::StorageMode::event_logs;
    contracts::JoinMode join_mode = contracts::JoinMode::auto_join;
    std::string event;                   // plaintext event text
    std::optional<policy::ActionKind> expect;
    bool perform_despite_deny = false;   // dishonest-controller injection
    bool restricted = false;             // join with restriction
    std::string caller = "subject";      // addChild / timeStep caller role
    std::uint32_t template_index = 0;
    std::vector<std::pair<std::string, std::string>> params;
    std::uint32_t count = 1;             // join / leave repetitions
    std::uint64_t tamper_block = 0;
    std::uint64_t tamper_offset = 0;
};

struct ChainSettings {
    ledger::LedgerConfig config;
    std::uint64_t tick_seconds = 86'400;
    /// Blocks after submission within which a subject transaction must be included.
    std::uint64_t inclusion_deadline_blocks = 3;
};

struct Scenario {
    std::string name;
    std::string description;
    std::uint64_t seed = 1;
    ChainSettings chain;
    contracts::CodeSizes code_sizes;
    ledger::GasPrice price;
    std::optional<provenance::DataModel> data_model;
    bool censor_withdrawals = false;
    std::vector<Actor> actors;
    std::vector<Step> steps;
    std::map<std::string, PolicyFile> policies;

    const Actor* actor(std::string_view id) const
    {
        for (const auto& a : actors)
            if (a.id == id) return &a;
        return nullptr;
    }

    const PolicyFile& policy_file(const std::string& path) const { return policies.at(path); }
};

namespace detail {

using nlohmann::json;

class Loader {
public:
    Loader(const json& j, std::filesystem::path base) : j_(j), base_(std::move(base)) {}

    Scenario load()
    {
        get(j_, "name", s_.name, true);
        get(j_, "description", s_.description, false);
        get(j_, "seed", s_.seed, false);
        chain();
        actors();
        if (j_.contains("dataModel")) {
            try {
                s_.data_model = provenance::DataModel::from_json(j_.at("dataModel"));
            } catch (const Error& e) {
                problem(std::string("dataModel: ") + e.what());
            }
        }
        canonicalise_data();
        if (!j_.contains("timeline") || !j_["timeline"].is_array())
            problem("timeline: missing or not an array");
        else
            timeline();
        if (!problems_.empty()) throw ScenarioError(problems_);
        return std::move(s_);
    }

private:
    const json& j_;
    std::filesystem::path base_;
    Scenario s_;
    std::vector<std::string> problems_;
    std::map<std::string, StepKind> aliases_; // alias -> creating step kind
    std::map<std::string, std::string> owner_; // subject contract alias -> subject id

    void problem(std::string p) { problems_.push_back(std::move(p)); }

    template <typename T>
    bool get(const json& obj, const char* key, T& out, bool required, const std::string& where = "")
    {
        if (!obj.contains(key)) {
            if (required) problem(where + (where.empty() ? "" : ": ") + "missing field '" + key + "'");
            return false;
        }
        try {
            out = obj.at(key).get<T>();
            return true;
        } catch (const json::exception&) {
            problem(where + (where.empty() ? "" : ": ") + "field '" + key + "' has the wrong type");
            return false;
        }
    }

    void chain()
    {
        static const json empty = json::object();
        const auto& c = j_.contains("chain") ? j_["chain"] : empty;
        auto& cfg = s_.chain.config;
        get(c, "blockGasLimit", cfg.block_gas_limit, false, "chain");
        get(c, "blockInterval", cfg.block_interval, false, "chain");
        get(c, "powDifficultyBits", cfg.pow_difficulty_bits, false, "chain");
        get(c, "tickSeconds", s_.chain.tick_seconds, false, "chain");
        get(c, "inclusionDeadlineBlocks", s_.chain.inclusion_deadline_blocks, false, "chain");
        if (s_.chain.tick_seconds == 0) problem("chain: tickSeconds must be positive");
        if (j_.contains("calibration")) {
            const auto& k = j_["calibration"];
            get(k, std::string(contracts::SubjectContract::blueprint_name).c_str(), s_.code_sizes.subject, false,
                "calibration");
            get(k, std::string(contracts::ControllerContract::blueprint_name).c_str(), s_.code_sizes.controller,
                false, "calibration");
        }
        if (j_.contains("price")) {
            get(j_["price"], "ethPerMillionGas", s_.price.eth_per_million_gas, false, "price");
            get(j_["price"], "eurPerEth", s_.price.eur_per_eth, false, "price");
        }
        if (j_.contains("censor")) get(j_["censor"], "dropWithdrawals", s_.censor_withdrawals, false, "censor");
    }

    void actors()
    {
        if (!j_.contains("actors") || !j_["actors"].is_array()) {
            problem("actors: missing or not an array");
            return;
        }
        std::set<std::string> ids;
        for (std::size_t i = 0; i < j_["actors"].size(); ++i) {
            const auto& ja = j_["actors"][i];
            auto where = "actors[" + std::to_string(i) + "]";
            Actor a;
            std::string role;
            get(ja, "id", a.id, true, where);
            get(ja, "role", role, true, where);
            if (role == "subject")
                a.role = ActorRole::subject;
            else if (role == "controller")
                a.role = ActorRole::controller;
            else if (role == "processor")
                a.role = ActorRole::processor;
            else if (!role.empty())
                problem(where + ": unknown role '" + role + "'");
            a.seed = a.id;
            get(ja, "seed", a.seed, false, where);
            if (a.seed.empty()) problem(where + ": seed must be nonempty");
            if (!a.id.empty() && !ids.insert(a.id).second) problem(where + ": duplicate actor id '" + a.id + "'");
            if (ja.contains("data")) {
                if (a.role != ActorRole::subject) problem(where + ": only subjects hold data");
                if (!ja["data"].is_object())
                    problem(where + ": data must be an object of path -> value");
                else
                    for (const auto& [path, value] : ja["data"].items()) {
                        if (!value.is_string()) {
                            problem(where + ": data value for '" + path + "' must be a string");
                            continue;
                        }
                        a.data.push_back({path, value.get<std::string>()});
                    }
            }
            s_.actors.push_back(std::move(a));
        }
    }

    void canonicalise_data()
    {
        if (!s_.data_model) return;
        for (auto& a : s_.actors)
            for (auto& d : a.data) {
                try {
                    d = s_.data_model->canonical(d);
                } catch (const Error& e) {
                    problem("actor " + a.id + ": " + e.what());
                }
            }
    }

    void need_actor(const std::string& id, ActorRole role, const std::string& where, const char* field)
    {
        if (id.empty()) {
            problem(where + ": missing field '" + field + "'");
            return;
        }
        const auto* a = s_.actor(id);
        if (!a)
            problem(where + ": unknown actor '" + id + "'");
        else if (a->role != role)
            problem(where + ": actor '" + id + "' is a " + std::string(to_string(a->role)) + ", expected " +
                    std::string(to_string(role)));
    }

    void need_alias(const std::string& alias, std::initializer_list<StepKind> kinds, const std::string& where,
                    const char* field)
    {
        if (alias.empty()) {
            problem(where + ": missing field '" + field + "'");
            return;
        }
        auto it = aliases_.find(alias);
        if (it == aliases_.end()) {
            problem(where + ": unknown contract '" + alias + "'");
            return;
        }
        if (std::find(kinds.begin(), kinds.end(), it->second) == kinds.end())
            problem(where + ": contract '" + alias + "' has the wrong kind for this step");
    }

    void load_policy(const std::string& path, const std::string& where)
    {
        if (path.empty()) {
            problem(where + ": missing field 'policy'");
            return;
        }
        if (s_.policies.contains(path)) return;
        auto full = base_ / path;
        std::ifstream in(full);
        if (!in) {
            problem(where + ": cannot read policy file " + full.string());
            return;
        }
        std::stringstream ss;
        ss << in.rdbuf();
        PolicyFile f{path, ss.str(), {}};
        try {
            f.document = policy::parse_document(f.text);
        } catch (const Error& e) {
            problem(where + ": policy file " + full.string() + ": " + e.what());
            return;
        }
        if (f.document.policies.empty()) {
            problem(where + ": policy file " + full.string() + " declares no policy");
            return;
        }
        s_.policies.emplace(path, std::move(f));
    }

    void check_event(const std::string& text, const std::string& where)
    {
        if (text.empty()) {
            problem(where + ": missing field 'event'");
            return;
        }
        try {
            policy::parse_event(text);
        } catch (const Error& e) {
            problem(where + ": event: " + e.what());
        }
    }

    void timeline()
    {
        Tick last = 0;
        const auto& tl = j_["timeline"];
        for (std::size_t i = 0; i < tl.size(); ++i) {
            const auto& js = tl[i];
            auto where = "timeline[" + std::to_string(i) + "]";
            Step st;
            std::string action;
            if (!get(js, "action", action, true, where)) continue;
            bool known = false;
            for (const auto& [k, n] : step_names)
                if (n == action) {
                    st.kind = k;
                    known = true;
                }
            if (!known) {
                problem(where + ": unknown action '" + action + "'");
                continue;
            }
            get(js, "tick", st.tick, st.kind != StepKind::tamper, where);
            if (st.kind == StepKind::tamper) st.tick = last;
            if (st.tick < last) problem(where + ": tick " + std::to_string(st.tick) + " goes back from " + std::to_string(last));
            last = std::max(last, st.tick);
            get(js, "label", st.label, false, where);
            std::uint64_t baseline = 0;
            if (get(js, "baselineGas", baseline, false, where)) st.baseline_gas = baseline;
            get(js, "subject", st.subject, false, where);
            get(js, "controller", st.controller, false, where);
            get(js, "processor", st.processor, false, where);
            get(js, "contract", st.contract, false, where);
            get(js, "as", st.alias, false, where);
            get(js, "child", st.child, false, where);
            get(js, "parent", st.parent, false, where);
            get(js, "policy", st.policy, false, where);
            get(js, "bindings", st.bindings, false, where);
            get(js, "data", st.data, false, where);
            get(js, "event", st.event, false, where);
            get(js, "performDespiteDeny", st.perform_despite_deny, false, where);
            get(js, "restricted", st.restricted, false, where);
            get(js, "caller", st.caller, false, where);
            get(js, "template", st.template_index, false, where);
            get(js, "count", st.count, false, where);
            get(js, "block", st.tamper_block, false, where);
            get(js, "offset", st.tamper_offset, false, where);
            if (js.contains("params")) {
                std::map<std::string, std::string> p;
                if (get(js, "params", p, false, where)) st.params.assign(p.begin(), p.end());
            }
            std::string s;
            if (get(js, "mode", s, false, where)) {
                if (s == "stateVariables")
                    st.mode = contracts::StorageMode::state_variables;
                else if (s != "eventLogs")
                    problem(where + ": mode must be stateVariables or eventLogs");
            }
            if (get(js, "joinMode", s, false, where)) {
                if (s == "explicitRejoin")
                    st.join_mode = contracts::JoinMode::explicit_rejoin;
                else if (s != "autoJoin")
                    problem(where + ": joinMode must be autoJoin or explicitRejoin");
            }
            if (get(js, "expect", s, false, where)) {
                if (s == "allow")
                    st.expect = policy::ActionKind::allow;
                else if (s == "deny")
                    st.expect = policy::ActionKind::deny;
                else if (s == "modify")
                    st.expect = policy::ActionKind::modify;
                else if (s == "delay")
                    st.expect = policy::ActionKind::delay;
                else
                    problem(where + ": expect must be allow, deny, modify or delay");
            }
            if (st.count == 0) problem(where + ": count must be positive");
            validate_step(st, where);
            s_.steps.push_back(std::move(st));
        }
    }

    void define_alias(const std::string& alias, StepKind kind, const std::string& where)
    {
        if (alias.empty()) {
            problem(where + ": missing field 'as'");
            return;
        }
        if (!aliases_.emplace(alias, kind).second) problem(where + ": contract alias '" + alias + "' already defined");
    }

    void validate_step(const Step& st, const std::string& where)
    {
        using K = StepKind;
        switch (st.kind) {
        case K::deploy:
            need_actor(st.subject, ActorRole::subject, where, "subject");
            need_actor(st.controller, ActorRole::controller, where, "controller");
            load_policy(st.policy, where);
            check_data(st.subject, st.data, where);
            if (!st.parent.empty()) need_alias(st.parent, {K::deploy, K::grant_data, K::transfer}, where, "parent");
            define_alias(st.alias, st.kind, where);
            owner_[st.alias] = st.subject;
            break;
        case K::deploy_controller:
            need_actor(st.controller, ActorRole::controller, where, "controller");
            load_policy(st.policy, where);
            if (!st.parent.empty()) need_alias(st.parent, {K::deploy_controller}, where, "parent");
            define_alias(st.alias, st.kind, where);
            break;
        case K::grant_data:
            need_alias(st.contract, {K::deploy}, where, "contract");
            if (st.data.empty()) problem(where + ": grantData needs at least one data path");
            if (owner_.contains(st.contract)) check_data(owner_[st.contract], st.data, where);
            define_alias(st.alias, st.kind, where);
            if (owner_.contains(st.contract)) owner_[st.alias] = owner_[st.contract];
            break;
        case K::usage_event:
            need_alias(st.contract, {K::deploy, K::grant_data, K::transfer}, where, "contract");
            check_event(st.event, where);
            break;
        case K::transfer:
            need_alias(st.contract, {K::deploy, K::grant_data}, where, "contract");
            need_actor(st.processor, ActorRole::processor, where, "processor");
            check_event(st.event, where);
            if (!st.policy.empty()) load_policy(st.policy, where);
            define_alias(st.alias, st.kind, where);
            if (owner_.contains(st.contract)) owner_[st.alias] = owner_[st.contract];
            break;
        case K::time_step:
            need_alias(st.contract, {K::deploy, K::grant_data, K::transfer}, where, "contract");
            check_caller(st, where);
            break;
        case K::join:
        case K::leave:
            need_actor(st.subject, ActorRole::subject, where, "subject");
            need_alias(st.contract, {K::deploy_controller}, where, "contract");
            break;
        case K::bulk_event:
            need_alias(st.contract, {K::deploy_controller}, where, "contract");
            break;
        case K::add_child:
            need_alias(st.contract, {K::deploy, K::grant_data, K::transfer, K::deploy_controller}, where, "contract");
            need_alias(st.child, {K::deploy, K::grant_data, K::transfer, K::deploy_controller}, where, "child");
            check_caller(st, where);
            break;
        case K::withdraw:
            need_alias(st.contract, {K::deploy, K::grant_data, K::transfer}, where, "contract");
            break;
        case K::tamper:
            break;
        }
    }

    void check_caller(const Step& st, const std::string& where)
    {
        if (st.caller != "subject" && st.caller != "controller")
            problem(where + ": caller must be subject or controller");
    }

    void check_data(const std::string& subject, const std::vector<std::string>& paths, const std::string& where)
    {
        const auto* a = s_.actor(subject);
        if (!a) return;
        for (const auto& p : paths)
            if (std::none_of(a->data.begin(), a->data.end(), [&](const auto& d) { return d.path == p; }))
                problem(where + ": subject '" + subject + "' holds no data at '" + p + "'");
    }
};

} // namespace detail

/// Parses and validates a scenario; policy paths resolve against `base_dir`.
inline Scenario parse_scenario(const nlohmann::json& j, const std::filesystem::path& base_dir)
{
    return detail::Loader(j, base_dir).load();
}

inline Scenario load_scenario(const std::filesystem::path& file)
{
    std::ifstream in(file);
    if (!in) throw ScenarioError({"cannot read scenario file " + file.string()});
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ScenarioError({file.string() + ": " + e.what()});
    }
    return parse_scenario(j, file.parent_path());
}

} // namespace dacc::harness
