// Command line front end: run scenarios, audit chains, compile policies,
// inspect chain exports.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dacc/dacc.hpp"

namespace {

using namespace dacc;
using nlohmann::json;

constexpr int exit_ok = 0;
constexpr int exit_check_failed = 1;
constexpr int exit_bad_input = 2;

ledger::ChainFile load_chain(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path);
    return ledger::read_chain(in);
}

void save_chain(const std::string& path, const ledger::ChainFile& f)
{
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    ledger::write_chain(out, f);
}

ledger::BlueprintRegistry registry_for(const ledger::ChainFile& f)
{
    contracts::CodeSizes sizes;
    if (auto it = f.blueprint_code_sizes.find(std::string(contracts::SubjectContract::blueprint_name));
        it != f.blueprint_code_sizes.end())
        sizes.subject = it->second;
    if (auto it = f.blueprint_code_sizes.find(std::string(contracts::ControllerContract::blueprint_name));
        it != f.blueprint_code_sizes.end())
        sizes.controller = it->second;
    return contracts::make_registry(sizes);
}

struct RunOptions {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::string gas_report;
    std::string export_chain;
    std::string bundle;
    bool quiet = false;
};

int cmd_run(const RunOptions& o)
{
    harness::Scenario s;
    try {
        s = harness::load_scenario(o.scenario);
    } catch (const harness::ScenarioError& e) {
        std::cerr << "invalid scenario " << o.scenario << ":\n";
        for (const auto& p : e.problems()) std::cerr << "  " << p << '\n';
        return exit_bad_input;
    }
    harness::RunResult r;
    try {
        r = harness::run_scenario(s, o.seed);
    } catch (const harness::OracleMismatch& e) {
        std::cerr << "oracle mismatch: " << e.what() << '\n';
        return exit_check_failed;
    } catch (const harness::CensorshipDetected& e) {
        std::cerr << "censorship detected: " << e.what() << '\n';
        return exit_check_failed;
    } catch (const harness::StepFailed& e) {
        std::cerr << "step failed: " << e.what() << '\n';
        return exit_check_failed;
    }

    if (!o.quiet) {
        std::cout << "scenario " << r.scenario << " (seed " << r.seed << "): " << r.ledger->blocks().size()
                  << " blocks, head " << r.ledger->head().block_hash.hex() << "\n\n";
        if (!r.decisions.empty()) {
            std::cout << "decisions\n";
            for (const auto& d : r.decisions)
                std::cout << "  @" << d.tick << "  " << d.contract << "  " << d.event << "  -> "
                          << policy::to_string(d.decision) << (d.performed ? "" : " (not performed)")
                          << (d.performed && d.decision == policy::ActionKind::deny ? " (performed anyway)" : "")
                          << '\n';
            std::cout << '\n';
        }
        if (!r.gas.entries().empty()) std::cout << r.gas.to_text() << '\n';
        for (const auto& [subject, g] : r.graphs) {
            if (g.entries().empty()) continue;
            std::cout << "provenance of " << subject << '\n';
            for (const auto& e : g.entries())
                std::cout << "  " << provenance::to_string(e.role) << ' ' << e.recipient.hex() << "  contract "
                          << e.contract.hex() << "  " << e.grants.size() << " data refs"
                          << (e.parent ? "  via " + e.parent->hex() : "") << '\n';
        }
        auto findings = harness::unlinkability_findings(r);
        for (const auto& f : findings) std::cout << "linkability: " << f << '\n';
    }
    if (!o.gas_report.empty()) {
        std::ofstream out(o.gas_report);
        if (!out) throw Error("cannot write " + o.gas_report);
        out << r.gas.to_json().dump(2) << '\n';
    }
    if (!o.export_chain.empty()) save_chain(o.export_chain, r.chain_file());
    if (!o.bundle.empty()) r.audit_bundle().save(o.bundle);
    return exit_ok;
}

int cmd_audit(const std::string& chain_path, const std::string& bundle_path, const std::string& report_path)
{
    auto f = load_chain(chain_path);
    auto bundle = harness::AuditBundle::load(bundle_path);
    auto report = harness::audit_verify(f.blocks, f.config, registry_for(f), bundle);
    if (!report.chain_valid) std::cout << "chain invalid: " << report.chain_problem << '\n';
    for (const auto& v : report.verdicts)
        std::cout << harness::to_string(v.status) << "  " << (v.contract ? v.contract->hex() : std::string("-")) << "  "
                  << v.item << (v.detail.empty() ? "" : ": " + v.detail) << '\n';
    std::cout << report.count(harness::VerdictStatus::consistent) << " consistent, "
              << report.count(harness::VerdictStatus::mismatch) << " mismatches, "
              << report.count(harness::VerdictStatus::violation) << " violations\n";
    if (!report_path.empty()) {
        std::ofstream out(report_path);
        if (!out) throw Error("cannot write " + report_path);
        out << report.to_json().dump(2) << '\n';
    }
    return report.clean() ? exit_ok : exit_check_failed;
}

int cmd_compile(const std::string& file, const std::string& nonce_hex, const std::vector<std::string>& bind)
{
    std::ifstream in(file);
    if (!in) throw Error("cannot read " + file);
    std::stringstream ss;
    ss << in.rdbuf();
    auto doc = policy::parse_document(ss.str());
    Nonce nonce;
    if (nonce_hex.empty()) {
        std::random_device rd;
        for (auto& b : nonce.bytes) b = static_cast<std::uint8_t>(rd());
    } else {
        nonce = Nonce::from_hex(nonce_hex);
    }
    policy::Bindings bindings;
    for (const auto& b : bind) {
        auto eq = b.find('=');
        if (eq == std::string::npos) throw InvalidArgument("binding must be name=value: " + b);
        bindings[b.substr(0, eq)] = b.substr(eq + 1);
    }
    json out = {{"nonce", nonce.hex()}, {"mechanisms", json::array()}, {"obligations", json::array()}};
    for (const auto& p : doc.policies) {
        if (const auto* m = std::get_if<policy::Mechanism>(&p)) {
            out["mechanisms"].push_back(compiler::inspect(compiler::compile(*m, nonce)));
        } else {
            const auto& t = std::get<policy::MechanismTemplate>(p);
            if (bindings.empty()) {
                std::cerr << "skipping template " << t.name << " (no --bind given)\n";
                continue;
            }
            out["mechanisms"].push_back(compiler::inspect(compiler::compile(policy::instantiate(t, bindings), nonce)));
        }
    }
    for (const auto& o : doc.obligations) {
        auto c = compiler::compile(o, nonce);
        out["obligations"].push_back(json{
            {"name", o.name}, {"fulfil", compiler::detail::pattern_json(c.fulfil)}, {"deadline", c.deadline_ticks}});
    }
    std::cout << out.dump(2) << '\n';
    return exit_ok;
}

int cmd_inspect(const std::string& file, const std::string& topic)
{
    auto f = load_chain(file);
    auto v = ledger::verify_chain(f.blocks, f.config, registry_for(f));
    std::size_t txs = 0;
    std::uint64_t gas = 0;
    for (const auto& b : f.blocks) {
        txs += b.transactions.size();
        gas += b.gas_used;
    }
    std::cout << f.blocks.size() << " blocks, " << txs << " transactions, " << gas << " gas\n";
    std::cout << "integrity: " << (v.ok ? "ok" : "FAILED at block " + std::to_string(v.first_bad_block.value_or(0)) + ": " + v.reason)
              << '\n';
    if (!v.ok) return exit_check_failed;
    if (topic.empty()) {
        for (const auto& [addr, c] : v.final_state.contracts)
            std::cout << "  " << addr.hex() << "  " << c.blueprint << (c.active ? "" : " (inactive)") << "  "
                      << c.storage.size() << " slots\n";
        return exit_ok;
    }
    std::optional<Hash32> wanted = contracts::topics::by_name(topic);
    if (!wanted) wanted = Hash32::from_hex(topic);
    for (const auto& b : f.blocks)
        for (const auto& rc : b.receipts)
            for (const auto& l : rc.logs) {
                if (l.topics.empty() || l.topics[0] != *wanted) continue;
                std::cout << "  block " << l.block_number << " tx " << l.tx_index << "  " << l.emitter.hex();
                for (std::size_t i = 1; i < l.topics.size(); ++i) std::cout << "  " << l.topics[i].hex();
                if (!l.data.empty()) std::cout << "  data " << to_hex(l.data);
                std::cout << '\n';
            }
    return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Usage control contracts on a simulated ledger"};
    app.require_subcommand(1);

    RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "Run a scenario and cross-check every decision");
    run_cmd->add_option("scenario", run.scenario, "Scenario file")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--seed", run.seed, "Override the scenario seed");
    run_cmd->add_option("--gas-report", run.gas_report, "Write the gas report (JSON)");
    run_cmd->add_option("--export-chain", run.export_chain, "Write the chain export (JSON Lines)");
    run_cmd->add_option("--bundle", run.bundle, "Write a full-disclosure audit bundle");
    run_cmd->add_flag("--quiet", run.quiet, "Print nothing on success");

    std::string chain, bundle, report;
    auto* audit_cmd = app.add_subcommand("audit", "Supervisory audit");
    audit_cmd->require_subcommand(1);
    auto* verify_cmd = audit_cmd->add_subcommand("verify", "Check disclosures against a chain export");
    verify_cmd->add_option("--chain", chain, "Chain export")->required()->check(CLI::ExistingFile);
    verify_cmd->add_option("--bundle", bundle, "Audit bundle")->required()->check(CLI::ExistingFile);
    verify_cmd->add_option("--report", report, "Write the verdicts (JSON)");

    std::string policy_file, nonce_hex;
    std::vector<std::string> bindings;
    auto* policy_cmd = app.add_subcommand("policy", "Policy tools");
    policy_cmd->require_subcommand(1);
    auto* compile_cmd = policy_cmd->add_subcommand("compile", "Compile a policy file to a contract blueprint");
    compile_cmd->add_option("file", policy_file, "Policy file")->required()->check(CLI::ExistingFile);
    compile_cmd->add_option("--nonce", nonce_hex, "32-byte nonce, hex (random if omitted)");
    compile_cmd->add_option("--bind", bindings, "Template binding name=value");

    std::string chain_file, topic;
    auto* chain_cmd = app.add_subcommand("chain", "Chain tools");
    chain_cmd->require_subcommand(1);
    auto* inspect_cmd = chain_cmd->add_subcommand("inspect", "Verify and summarise a chain export");
    inspect_cmd->add_option("file", chain_file, "Chain export")->required()->check(CLI::ExistingFile);
    inspect_cmd->add_option("--logs", topic, "List logs with this topic (event name or hex)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) return cmd_run(run);
        if (*verify_cmd) return cmd_audit(chain, bundle, report);
        if (*compile_cmd) return cmd_compile(policy_file, nonce_hex, bindings);
        if (*inspect_cmd) return cmd_inspect(chain_file, topic);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_bad_input;
    }
    return exit_bad_input;
}
