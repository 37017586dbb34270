#pragma once

#include <array>
#include <filesystem>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dacc/dacc.hpp"

namespace testsupport {

using namespace dacc;

// ---------------------------------------------------------------------------
// Independent SHA3-256 (FIPS 202), written from the permutation definition.
// Used as an oracle for digests produced through OpenSSL.
// ---------------------------------------------------------------------------

namespace keccak {

inline constexpr std::array<std::uint64_t, 24> round_constants{
    0x0000000000000001ULL, 0x0000000000008082ULL, 0x800000000000808aULL, 0x8000000080008000ULL,
    0x000000000000808bULL, 0x0000000080000001ULL, 0x8000000080008081ULL, 0x8000000000008009ULL,
    0x000000000000008aULL, 0x0000000000000088ULL, 0x0000000080008009ULL, 0x000000008000000aULL,
    0x000000008000808bULL, 0x800000000000008bULL, 0x8000000000008089ULL, 0x8000000000008003ULL,
    0x8000000000008002ULL, 0x8000000000000080ULL, 0x000000000000800aULL, 0x800000008000000aULL,
    0x8000000080008081ULL, 0x8000000000008080ULL, 0x0000000080000001ULL, 0x8000000080008008ULL};

inline std::uint64_t rotl(std::uint64_t x, unsigned n) { return n == 0 ? x : (x << n) | (x >> (64 - n)); }

inline void permute(std::array<std::uint64_t, 25>& a)
{
    for (auto rc : round_constants) {
        std::array<std::uint64_t, 5> c{};
        for (int x = 0; x < 5; ++x) c[x] = a[x] ^ a[x + 5] ^ a[x + 10] ^ a[x + 15] ^ a[x + 20];
        for (int x = 0; x < 5; ++x) {
            auto d = c[(x + 4) % 5] ^ rotl(c[(x + 1) % 5], 1);
            for (int y = 0; y < 5; ++y) a[x + 5 * y] ^= d;
        }
        // rho and pi
        std::array<std::uint64_t, 25> b{};
        int x = 1, y = 0;
        b[0] = a[0];
        for (unsigned t = 0; t < 24; ++t) {
            unsigned r = ((t + 1) * (t + 2) / 2) % 64;
            int nx = y, ny = (2 * x + 3 * y) % 5;
            b[nx + 5 * ny] = rotl(a[x + 5 * y], r);
            x = nx;
            y = ny;
        }
        // chi
        for (int yy = 0; yy < 5; ++yy)
            for (int xx = 0; xx < 5; ++xx)
                a[xx + 5 * yy] = b[xx + 5 * yy] ^ (~b[(xx + 1) % 5 + 5 * yy] & b[(xx + 2) % 5 + 5 * yy]);
        a[0] ^= rc;
    }
}

inline std::array<std::uint8_t, 32> sha3_256(const std::vector<std::uint8_t>& msg)
{
    constexpr std::size_t rate = 136;
    std::vector<std::uint8_t> m = msg;
    m.push_back(0x06);
    while (m.size() % rate) m.push_back(0);
    m.back() |= 0x80;
    std::array<std::uint64_t, 25> s{};
    for (std::size_t off = 0; off < m.size(); off += rate) {
        for (std::size_t i = 0; i < rate / 8; ++i) {
            std::uint64_t lane = 0;
            for (int k = 7; k >= 0; --k) lane = (lane << 8) | m[off + 8 * i + k];
            s[i] ^= lane;
        }
        permute(s);
    }
    std::array<std::uint8_t, 32> out{};
    for (std::size_t i = 0; i < 32; ++i) out[i] = static_cast<std::uint8_t>(s[i / 8] >> (8 * (i % 8)));
    return out;
}

inline std::string hex(const std::array<std::uint8_t, 32>& d)
{
    static const char* digits = "0123456789abcdef";
    std::string s;
    for (auto b : d) {
        s += digits[b >> 4];
        s += digits[b & 15];
    }
    return s;
}

inline std::vector<std::uint8_t> bytes(std::string_view s) { return {s.begin(), s.end()}; }

// Canonical salted encoding, rebuilt by hand: each field as a 4-byte
// big-endian length then its bytes, then the 32-byte nonce.
inline std::vector<std::uint8_t> salted_encoding(std::initializer_list<std::string_view> fields, const Nonce& nonce)
{
    std::vector<std::uint8_t> out;
    for (auto f : fields) {
        auto n = static_cast<std::uint32_t>(f.size());
        for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(n >> (8 * i)));
        out.insert(out.end(), f.begin(), f.end());
    }
    out.insert(out.end(), nonce.bytes.begin(), nonce.bytes.end());
    return out;
}

} // namespace keccak

// ---------------------------------------------------------------------------
// Ledger fixture helpers
// ---------------------------------------------------------------------------

inline const char* billing_text = R"(mechanism billing
  on tentative sendMessage(type = "billing", to = "email")
  allow if not within 30 (actual sendMessage(type = "billing"))
end)";

inline Nonce nonce_from(std::string_view seed) { return Nonce::from_span(crypto::sha3_256(seed).bytes); }

inline Nonce random_nonce(std::mt19937_64& rng)
{
    Nonce n;
    for (auto& b : n.bytes) b = static_cast<std::uint8_t>(rng());
    return n;
}

/// A ledger with both blueprints and a tiny submit-and-seal helper.
struct Chain {
    ledger::Ledger ledger;

    explicit Chain(ledger::LedgerConfig cfg = {}, contracts::CodeSizes sizes = {})
        : ledger(std::move(cfg), contracts::make_registry(sizes))
    {
    }

    ledger::Receipt send(const crypto::KeyPair& k, std::optional<Address> to, Bytes payload,
                         std::uint64_t gas_limit = 4'000'000)
    {
        auto tx = ledger::sign_transaction(k, ledger.next_nonce(k.address()), to, std::move(payload), gas_limit);
        auto h = ledger.submit(tx);
        ledger.seal_block();
        return *ledger.receipt(h);
    }

    ledger::Receipt call(const crypto::KeyPair& k, const Address& to, std::string_view fn, Bytes args = {})
    {
        return send(k, to, ledger::abi::encode_call(fn, args));
    }
};

/// Subject contract terms for the usual subject/controller pair.
inline contracts::SubjectInit subject_init(const crypto::KeyPair& subject, const crypto::KeyPair& controller,
                                           const policy::Mechanism& mech, const Nonce& nonce,
                                           contracts::StorageMode mode = contracts::StorageMode::event_logs,
                                           std::vector<provenance::DataInstance> data = {})
{
    contracts::SubjectInit init;
    init.terms.subject = subject.address();
    init.terms.controller = controller.address();
    init.terms.sealed_nonce = crypto::seal(nonce.bytes, controller.public_key(), crypto::sha3_256("seal"));
    init.terms.policy = compiler::compile(mech, nonce);
    init.terms.mode = mode;
    for (const auto& d : data) init.data_refs.push_back(provenance::commit(d, nonce));
    return init;
}

inline Address deploy_subject(Chain& c, const crypto::KeyPair& subject, const contracts::SubjectInit& init)
{
    auto rc = c.send(subject, std::nullopt,
                     ledger::abi::encode_create(contracts::SubjectContract::blueprint_name, init.encode()));
    if (!rc.ok()) throw Error("subject deploy failed: " + rc.revert_reason());
    return *rc.created_address;
}

// ---------------------------------------------------------------------------
// Random mechanisms and traces over a small alphabet
// ---------------------------------------------------------------------------

struct Alphabet {
    std::vector<std::string> activities{"a", "b"};
    std::vector<std::string> values{"x", "y"};
};

inline policy::EventPattern random_pattern(std::mt19937_64& rng, const Alphabet& al, policy::Phase phase)
{
    policy::EventPattern p;
    p.phase = phase;
    p.activity = al.activities[rng() % al.activities.size()];
    switch (rng() % 3) {
    case 0: break;
    case 1: p.attributes.push_back({"k", policy::MatchKind::equals, al.values[rng() % al.values.size()]}); break;
    default: p.attributes.push_back({"k", policy::MatchKind::wildcard, ""}); break;
    }
    return p;
}

/// Random condition in the supported grammar. `temporal` is true below a
/// within, where tentative matches are not allowed.
inline policy::Condition random_condition(std::mt19937_64& rng, const Alphabet& al, int depth, bool temporal)
{
    using namespace policy;
    int choice = depth <= 0 ? static_cast<int>(rng() % 2) : static_cast<int>(rng() % 7);
    switch (choice) {
    case 0: return match(random_pattern(rng, al, Phase::actual));
    case 1:
        if (!temporal) return match(random_pattern(rng, al, Phase::tentative));
        return match(random_pattern(rng, al, Phase::actual));
    case 2: return negate(random_condition(rng, al, depth - 1, temporal));
    case 3: return all_of({random_condition(rng, al, depth - 1, temporal), random_condition(rng, al, depth - 1, temporal)});
    case 4: return any_of({random_condition(rng, al, depth - 1, temporal), random_condition(rng, al, depth - 1, temporal)});
    case 5: return within(1 + rng() % 6, random_condition(rng, al, depth - 1, true));
    default: return cardinality(rng() % 3, 1 + rng() % 6, random_pattern(rng, al, Phase::actual));
    }
}

// The compiler keeps one last-true record per temporal operand, so under a
// within only actual matches, or, within, and an and with a point operand
// (an actual match or a nested and) are accepted.
inline policy::Condition random_temporal(std::mt19937_64& rng, const Alphabet& al, int depth)
{
    using namespace policy;
    auto point = [&](int d) {
        if (d <= 0 || rng() % 2) return match(random_pattern(rng, al, Phase::actual));
        return all_of({match(random_pattern(rng, al, Phase::actual)), random_temporal(rng, al, d - 1)});
    };
    switch (depth <= 0 ? 0 : rng() % 4) {
    case 0: return match(random_pattern(rng, al, Phase::actual));
    case 1: return any_of({random_temporal(rng, al, depth - 1), random_temporal(rng, al, depth - 1)});
    case 2: return all_of({point(depth - 1), random_temporal(rng, al, depth - 1)});
    default: return within(1 + rng() % 6, random_temporal(rng, al, depth - 1));
    }
}

inline policy::Condition random_compilable_condition(std::mt19937_64& rng, const Alphabet& al, int depth)
{
    using namespace policy;
    switch (depth <= 0 ? rng() % 2 : rng() % 7) {
    case 0: return match(random_pattern(rng, al, Phase::actual));
    case 1: return match(random_pattern(rng, al, Phase::tentative));
    case 2: return negate(random_compilable_condition(rng, al, depth - 1));
    case 3:
        return all_of({random_compilable_condition(rng, al, depth - 1), random_compilable_condition(rng, al, depth - 1)});
    case 4:
        return any_of({random_compilable_condition(rng, al, depth - 1), random_compilable_condition(rng, al, depth - 1)});
    case 5: return within(1 + rng() % 6, random_temporal(rng, al, depth - 1));
    default: return cardinality(rng() % 3, 1 + rng() % 6, random_pattern(rng, al, Phase::actual));
    }
}

inline policy::Mechanism random_mechanism(std::mt19937_64& rng, const Alphabet& al = {}, bool compilable = false)
{
    policy::Mechanism m;
    m.name = "random";
    m.trigger = random_pattern(rng, al, policy::Phase::tentative);
    m.condition = compilable ? random_compilable_condition(rng, al, 3) : random_condition(rng, al, 3, false);
    m.action = rng() % 2 ? policy::EnforcementAction::allow() : policy::EnforcementAction{policy::ActionKind::delay, {}, 2};
    policy::validate(m);
    return m;
}

inline policy::Event random_event(std::mt19937_64& rng, const Alphabet& al)
{
    policy::Event e{al.activities[rng() % al.activities.size()], {}};
    if (rng() % 4 != 0) e.attributes.push_back({"k", al.values[rng() % al.values.size()]});
    return e;
}

/// One trace input: a probe, an actual event or a bare time step.
struct TraceStep {
    enum Kind { probe, actual, tick } kind = probe;
    policy::Event event;
    policy::Tick at = 0;
};

inline std::vector<TraceStep> random_trace(std::mt19937_64& rng, const Alphabet& al, std::size_t length)
{
    std::vector<TraceStep> out;
    policy::Tick t = 0;
    for (std::size_t i = 0; i < length; ++i) {
        t += rng() % 3 == 0 ? rng() % 5 : 0;
        auto k = rng() % 5;
        TraceStep s;
        s.kind = k < 2 ? TraceStep::probe : k < 4 ? TraceStep::actual : TraceStep::tick;
        s.event = random_event(rng, al);
        s.at = t;
        out.push_back(std::move(s));
    }
    return out;
}

/// Runs a trace through the oracle and the compiled runner. Returns the
/// index of the first disagreeing probe, or -1.
inline long first_disagreement(const policy::Mechanism& m, const std::vector<TraceStep>& trace, const Nonce& nonce)
{
    policy::ReferenceInterpreter oracle(m);
    compiler::CompiledPolicyRunner runner(compiler::compile(m, nonce));
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto& s = trace[i];
        auto obf = compiler::obfuscate(s.event, nonce);
        switch (s.kind) {
        case TraceStep::probe:
            if (oracle.probe(s.event, s.at).kind != runner.probe(obf, s.at)) return static_cast<long>(i);
            oracle.advance(s.at);
            runner.advance(s.at);
            break;
        case TraceStep::actual:
            oracle.record(s.event, s.at);
            runner.record(obf, s.at);
            break;
        case TraceStep::tick:
            oracle.advance(s.at);
            runner.advance(s.at);
            break;
        }
    }
    return -1;
}

inline std::filesystem::path scenario_dir() { return std::filesystem::path(DACC_SOURCE_DIR) / "scenarios"; }

} // namespace testsupport
