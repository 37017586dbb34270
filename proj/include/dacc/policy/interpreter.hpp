#pragma once

#include <algorithm>

#include "dacc/policy/ast.hpp"

namespace dacc::policy {

class TimeTravelError : public Error {
public:
    using Error::Error;
};

class UnsupportedOperator : public Error {
public:
    using Error::Error;
};

struct TimedEvent {
    Tick tick = 0;
    Event event;
    bool operator==(const TimedEvent&) const = default;
};

struct InterpreterState {
    Tick current_tick = 0;
    std::vector<TimedEvent> history; // actual events, ticks non-decreasing

    bool operator==(const InterpreterState&) const = default;
};

namespace detail {

// Brute-force evaluation of `c` at tick `at`, seeing only history up to and
// including `at`. `probe` is the tentative event being decided, if any.
inline bool holds(const Condition& c, const std::vector<TimedEvent>& history, Tick at, const Event* probe)
{
    return std::visit(
        [&](const auto& n) -> bool {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, EventMatch>) {
                if (n.pattern.phase == Phase::tentative) return probe && matches(n.pattern, *probe);
                return std::any_of(history.begin(), history.end(), [&](const TimedEvent& h) {
                    return h.tick == at && matches(n.pattern, h.event);
                });
            } else if constexpr (std::is_same_v<T, Not>) {
                return !holds(*n.child, history, at, probe);
            } else if constexpr (std::is_same_v<T, And>) {
                for (const auto& ch : n.children)
                    if (!holds(ch, history, at, probe)) return false;
                return true;
            } else if constexpr (std::is_same_v<T, Or>) {
                for (const auto& ch : n.children)
                    if (holds(ch, history, at, probe)) return true;
                return false;
            } else if constexpr (std::is_same_v<T, Within>) {
                // A tentative probe exists only at the current tick.
                Tick first = at + 1 > n.window ? at + 1 - n.window : 0;
                for (Tick s = at + 1; s-- > first;)
                    if (holds(*n.child, history, s, s == at ? probe : nullptr)) return true;
                return false;
            } else if constexpr (std::is_same_v<T, ExternalPredicate>) {
                throw UnsupportedOperator("operator '" + n.op + "' needs external information and cannot be evaluated");
            } else {
                Tick first = at + 1 > n.window ? at + 1 - n.window : 0;
                std::uint64_t count = 0;
                for (const auto& h : history)
                    if (h.tick >= first && h.tick <= at && matches(n.pattern, h.event)) ++count;
                return count <= n.limit;
            }
        },
        c.node);
}

} // namespace detail

/// Reference interpreter: keeps the full event history and re-evaluates
/// conditions by exhaustive scan.
class ReferenceInterpreter {
public:
    explicit ReferenceInterpreter(Mechanism m, EnforcementAction default_decision = EnforcementAction::deny())
        : mechanism_(std::move(m)), default_(std::move(default_decision))
    {
    }

    const Mechanism& mechanism() const noexcept { return mechanism_; }
    const InterpreterState& state() const noexcept { return state_; }
    Tick current_tick() const noexcept { return state_.current_tick; }

    /// Decision for a tentative event at `tick`. Does not change state.
    EnforcementAction probe(const Event& e, Tick tick) const
    {
        check_tick(tick);
        return decide(mechanism_, default_, state_.history, e, tick);
    }

    void record(const Event& e, Tick tick)
    {
        check_tick(tick);
        state_.current_tick = tick;
        state_.history.push_back({tick, e});
    }

    void advance(Tick tick)
    {
        check_tick(tick);
        state_.current_tick = tick;
    }

    /// Probes, then records the event as happened unless it was denied.
    /// Mirrors what a contract does when notified of a usage.
    EnforcementAction notify(const Event& e, Tick tick)
    {
        auto d = probe(e, tick);
        if (d.kind != ActionKind::deny)
            record(e, tick);
        else
            advance(tick);
        return d;
    }

    static EnforcementAction decide(const Mechanism& m, const EnforcementAction& fallback,
                                    const std::vector<TimedEvent>& history, const Event& e, Tick tick)
    {
        if (matches(m.trigger, e) && detail::holds(m.condition, history, tick, &e)) return m.action;
        return fallback;
    }

private:
    Mechanism mechanism_;
    EnforcementAction default_;
    InterpreterState state_;

    void check_tick(Tick tick) const
    {
        if (tick < state_.current_tick)
            throw TimeTravelError("input at tick " + std::to_string(tick) + " precedes current tick " +
                                  std::to_string(state_.current_tick));
    }
};

/// One input to the pure step function.
struct ProbeInput {
    Event event;
    Tick tick;
};
struct ActualInput {
    Event event;
    Tick tick;
};
struct TickInput {
    Tick tick;
};
using StepInput = std::variant<ProbeInput, ActualInput, TickInput>;

struct StepResult {
    std::optional<EnforcementAction> decision;
    InterpreterState state;
};

/// Pure form of the interpreter: (state, input) -> (decision?, state').
inline StepResult reference_step(const Mechanism& m, const EnforcementAction& fallback, InterpreterState state,
                                 const StepInput& input)
{
    auto check = [&](Tick t) {
        if (t < state.current_tick)
            throw TimeTravelError("input at tick " + std::to_string(t) + " precedes current tick " +
                                  std::to_string(state.current_tick));
    };
    StepResult out;
    std::visit(
        [&](const auto& in) {
            using T = std::decay_t<decltype(in)>;
            check(in.tick);
            if constexpr (std::is_same_v<T, ProbeInput>) {
                out.decision = ReferenceInterpreter::decide(m, fallback, state.history, in.event, in.tick);
            } else if constexpr (std::is_same_v<T, ActualInput>) {
                state.history.push_back({in.tick, in.event});
                state.current_tick = in.tick;
            } else {
                state.current_tick = in.tick;
            }
        },
        input);
    out.state = std::move(state);
    return out;
}

/// Deadline obligation oracle: violated at `now` iff the deadline has
/// passed and no fulfilling event happened by it.
inline bool obligation_violated(const DeadlineObligation& o, Tick start, const std::vector<TimedEvent>& history,
                                Tick now)
{
    Tick deadline = start + o.deadline_ticks;
    if (now <= deadline) return false;
    return std::none_of(history.begin(), history.end(), [&](const TimedEvent& h) {
        return h.tick >= start && h.tick <= deadline && matches(o.fulfil, h.event);
    });
}

} // namespace dacc::policy
