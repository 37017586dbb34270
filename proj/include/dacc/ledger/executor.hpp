#pragma once

#include "dacc/ledger/contract.hpp"

namespace dacc::ledger {

/// Query failure: missing contract/function or a revert inside read-only code.
class QueryError : public Error {
public:
    using Error::Error;
};

/// Contract address for a CREATE: last 20 bytes of SHA3-256(sender || u64be(nonce)).
inline Address contract_address(const Address& sender, std::uint64_t nonce)
{
    ByteWriter w;
    w.fixed(sender).u64(nonce);
    auto h = crypto::sha3_256(w.buffer());
    Address a;
    std::copy(h.bytes.begin() + 12, h.bytes.end(), a.bytes.begin());
    return a;
}

/// Applies a single, already-authenticated transaction to `state`.
///
/// The sender nonce advances regardless of outcome. Reverts keep the gas
/// consumed so far; out-of-gas consumes the whole limit.
inline Receipt apply_transaction(WorldState& state, const BlueprintRegistry& registry, const GasSchedule& schedule,
                                 const Transaction& tx, BlockInfo block, std::uint32_t tx_index)
{
    Receipt rc;
    rc.tx_hash = tx.hash();
    auto& sender = state.accounts[tx.sender];
    const auto nonce = sender.nonce;
    sender.nonce += 1;

    auto fail = [&](TxStatus status, std::uint64_t gas, std::string reason) {
        rc.status = status;
        rc.gas_used = gas;
        rc.logs.clear();
        rc.created_address.reset();
        rc.return_value.assign(reason.begin(), reason.end());
        return rc;
    };

    std::uint64_t intrinsic = schedule.tx_base + (tx.is_create() ? schedule.create_base : 0);
    if (tx.gas_limit < intrinsic) return fail(TxStatus::out_of_gas, tx.gas_limit, "intrinsic gas exceeds limit");

    if (tx.is_create()) {
        abi::CreatePayload create;
        try {
            create = abi::decode_create(tx.payload);
        } catch (const DecodeError& e) {
            return fail(TxStatus::reverted, intrinsic, e.what());
        }
        const auto* bp = registry.find(create.blueprint);
        if (!bp) return fail(TxStatus::reverted, intrinsic, "unknown blueprint " + create.blueprint);

        auto addr = contract_address(tx.sender, nonce);
        if (state.contracts.contains(addr)) return fail(TxStatus::reverted, intrinsic, "address collision");
        ContractInstance inst;
        inst.address = addr;
        inst.blueprint = create.blueprint;
        inst.code_size = bp->code_size();
        auto& slot = state.contracts.emplace(addr, std::move(inst)).first->second;

        CallContext ctx(schedule, tx.gas_limit, slot, state, tx.sender, block, tx_index);
        try {
            ctx.charge(intrinsic);
            ctx.charge(schedule.code_deposit_per_byte * bp->code_size());
            ctx.set_constructing(true);
            bp->construct(ctx, create.args);
            ctx.set_constructing(false);
        } catch (const OutOfGas&) {
            state.contracts.erase(addr);
            return fail(TxStatus::out_of_gas, tx.gas_limit, "out of gas");
        } catch (const Error& e) {
            auto used = ctx.gas_used();
            state.contracts.erase(addr);
            return fail(TxStatus::reverted, used, e.what());
        }
        rc.gas_used = ctx.gas_used();
        rc.created_address = addr;
        rc.logs = ctx.take_logs();
        return rc;
    }

    auto it = state.contracts.find(*tx.target);
    if (it == state.contracts.end()) {
        if (!tx.payload.empty()) return fail(TxStatus::reverted, intrinsic, "call data sent to an account without code");
        state.accounts[*tx.target]; // plain transfer: materialise the recipient
        rc.gas_used = intrinsic;
        return rc;
    }

    auto& inst = it->second;
    const auto* bp = registry.find(inst.blueprint);
    if (!bp) return fail(TxStatus::reverted, intrinsic, "blueprint not registered: " + inst.blueprint);
    if (tx.payload.size() < 4) return fail(TxStatus::reverted, intrinsic, "missing function selector");
    abi::Selector sel{tx.payload[0], tx.payload[1], tx.payload[2], tx.payload[3]};
    const auto* fn = bp->find_function(sel);
    if (!fn) return fail(TxStatus::reverted, intrinsic, "unknown function selector");
    if (fn->mutating && !inst.active) return fail(TxStatus::reverted, intrinsic, "contract is inactive");

    CallContext ctx(schedule, tx.gas_limit, inst, state, tx.sender, block, tx_index);
    try {
        ctx.charge(intrinsic);
        rc.return_value = bp->call(ctx, fn->name, ByteView(tx.payload).subspan(4));
    } catch (const OutOfGas&) {
        ctx.rollback();
        return fail(TxStatus::out_of_gas, tx.gas_limit, "out of gas");
    } catch (const Error& e) {
        auto used = ctx.gas_used();
        ctx.rollback();
        return fail(TxStatus::reverted, used, e.what());
    }
    rc.gas_used = ctx.gas_used();
    rc.logs = ctx.take_logs();
    return rc;
}

/// Evaluates a read-only function without gas accounting or state change.
inline Bytes run_query(const WorldState& state, const BlueprintRegistry& registry, const GasSchedule& schedule,
                       const Address& contract, std::string_view function, ByteView args, const Address& caller,
                       BlockInfo block, std::uint64_t compute_budget)
{
    auto it = state.contracts.find(contract);
    if (it == state.contracts.end()) throw QueryError("no contract at " + contract.hex());
    const auto* bp = registry.find(it->second.blueprint);
    if (!bp) throw QueryError("blueprint not registered: " + it->second.blueprint);
    const auto* fn = bp->find_function(abi::selector(function));
    if (!fn) throw QueryError("unknown function " + std::string(function));
    CallContext ctx(schedule, compute_budget, it->second, state, caller, block);
    try {
        return bp->call(ctx, fn->name, args);
    } catch (const ReadOnlyViolation&) {
        throw;
    } catch (const Error& e) {
        throw QueryError(e.what());
    }
}

} // namespace dacc::ledger
