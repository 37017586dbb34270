#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <utility>

#include "dacc/ledger/abi.hpp"
#include "dacc/ledger/gas.hpp"
#include "dacc/ledger/types.hpp"

namespace dacc::ledger {

/// Thrown by contract code to abort the call; state is rolled back.
class Revert : public Error {
public:
    using Error::Error;
};

class OutOfGas : public Error {
public:
    OutOfGas() : Error("out of gas") {}
};

/// A read-only query tried to write storage or emit a log.
class ReadOnlyViolation : public Error {
public:
    using Error::Error;
};

struct FunctionSpec {
    std::string name;
    bool mutating = true;
};

struct BlockInfo {
    std::uint64_t number = 0;
    std::uint64_t timestamp = 0;
};

/// Metered execution environment handed to native contract code.
///
/// Every storage access, log and compute step is charged against the gas
/// limit. Writes are journaled so a revert restores storage bit-exactly.
class CallContext {
public:
    /// Mutating context. `self` must outlive the context.
    CallContext(const GasSchedule& schedule, std::uint64_t gas_limit, ContractInstance& self, const WorldState& world,
                const Address& caller, BlockInfo block, std::uint32_t tx_index)
        : schedule_(schedule), gas_limit_(gas_limit), self_(self), mutable_self_(&self), world_(world),
          caller_(caller), block_(block), tx_index_(tx_index)
    {
    }

    /// Read-only context for queries.
    CallContext(const GasSchedule& schedule, std::uint64_t gas_limit, const ContractInstance& self,
                const WorldState& world, const Address& caller, BlockInfo block)
        : schedule_(schedule), gas_limit_(gas_limit), self_(self), world_(world), caller_(caller), block_(block)
    {
    }

    CallContext(const CallContext&) = delete;
    CallContext& operator=(const CallContext&) = delete;

    const Address& caller() const noexcept { return caller_; }
    const Address& self_address() const noexcept { return self_.address; }
    const BlockInfo& block() const noexcept { return block_; }
    bool read_only() const noexcept { return mutable_self_ == nullptr; }
    bool active() const noexcept { return self_.active; }
    const GasSchedule& schedule() const noexcept { return schedule_; }

    void charge(std::uint64_t gas)
    {
        if (gas > gas_limit_ - gas_used_) {
            gas_used_ = gas_limit_;
            throw OutOfGas();
        }
        gas_used_ += gas;
    }
    void step(std::uint64_t n = 1) { charge(n * schedule_.compute_per_step); }

    std::uint64_t gas_used() const noexcept { return gas_used_; }
    std::uint64_t gas_limit() const noexcept { return gas_limit_; }

    Hash32 load(const Hash32& key)
    {
        charge(schedule_.storage_read);
        auto it = self_.storage.find(key);
        return it == self_.storage.end() ? Hash32{} : it->second;
    }

    bool has_slot(const Hash32& key) const { return self_.storage.contains(key); }

    void store(const Hash32& key, const Hash32& value)
    {
        require_mutable("storage write");
        auto it = mutable_self_->storage.find(key);
        if (it == mutable_self_->storage.end()) {
            charge(schedule_.storage_write_new_slot);
            journal_.emplace_back(key, std::nullopt);
            mutable_self_->storage.emplace(key, value);
        } else {
            charge(schedule_.storage_write_existing_slot);
            journal_.emplace_back(key, it->second);
            it->second = value;
        }
    }

    void emit(std::vector<Hash32> topics, Bytes data)
    {
        require_mutable("log emission");
        if (topics.size() > max_log_topics) throw Revert("too many log topics");
        charge(schedule_.log_cost(topics.size(), data.size()));
        logs_.push_back(LogEvent{self_.address, std::move(topics), std::move(data), block_.number, tx_index_});
    }

    /// Constructor only: deposit immutable bytes alongside the code.
    void deposit_code(ByteView immutables)
    {
        require_mutable("code deposit");
        if (!constructing_) throw Revert("code can only be deposited by the constructor");
        charge(schedule_.code_deposit_per_byte * immutables.size());
        mutable_self_->code.assign(immutables.begin(), immutables.end());
        mutable_self_->code_size += immutables.size();
    }

    ByteView code() const noexcept { return self_.code; }

    /// Marks the contract inactive; priced as an existing-slot write.
    void deactivate()
    {
        require_mutable("deactivation");
        charge(schedule_.storage_write_existing_slot);
        if (mutable_self_->active) deactivated_ = true;
        mutable_self_->active = false;
    }

    /// Another contract's instance, or nullptr. Priced as a storage read.
    const ContractInstance* peek_contract(const Address& addr)
    {
        charge(schedule_.storage_read);
        auto it = world_.contracts.find(addr);
        return it == world_.contracts.end() ? nullptr : &it->second;
    }

    Hash32 load_external(const Address& addr, const Hash32& key)
    {
        charge(schedule_.storage_read);
        auto it = world_.contracts.find(addr);
        if (it == world_.contracts.end()) return {};
        auto s = it->second.storage.find(key);
        return s == it->second.storage.end() ? Hash32{} : s->second;
    }

    [[noreturn]] void revert(const std::string& reason) const { throw Revert(reason); }

    /// Restores storage and activity to the state before the call.
    void rollback()
    {
        if (!mutable_self_) return;
        for (auto it = journal_.rbegin(); it != journal_.rend(); ++it) {
            if (it->second)
                mutable_self_->storage[it->first] = *it->second;
            else
                mutable_self_->storage.erase(it->first);
        }
        journal_.clear();
        logs_.clear();
        if (deactivated_) mutable_self_->active = true;
        deactivated_ = false;
    }

    std::vector<LogEvent> take_logs() { return std::exchange(logs_, {}); }

    void set_constructing(bool v) noexcept { constructing_ = v; }

private:
    void require_mutable(const char* what) const
    {
        if (read_only()) throw ReadOnlyViolation(std::string(what) + " attempted in read-only query");
    }

    const GasSchedule& schedule_;
    std::uint64_t gas_limit_;
    std::uint64_t gas_used_ = 0;
    const ContractInstance& self_;
    ContractInstance* mutable_self_ = nullptr;
    const WorldState& world_;
    Address caller_;
    BlockInfo block_;
    std::uint32_t tx_index_ = 0;
    std::vector<std::pair<Hash32, std::optional<Hash32>>> journal_;
    std::vector<LogEvent> logs_;
    bool constructing_ = false;
    bool deactivated_ = false;
};

/// A contract blueprint: native state machine code registered with the chain.
class NativeContract {
public:
    virtual ~NativeContract() = default;

    virtual std::string_view name() const = 0;
    /// Synthetic code size in bytes, metered at deployment.
    virtual std::uint64_t code_size() const = 0;
    virtual std::vector<FunctionSpec> functions() const = 0;
    virtual void construct(CallContext& ctx, ByteView args) const = 0;
    virtual Bytes call(CallContext& ctx, std::string_view function, ByteView args) const = 0;

    const FunctionSpec* find_function(const abi::Selector& sel) const
    {
        std::call_once(index_once_, [this] {
            for (auto& f : functions()) cached_.emplace_back(abi::selector(f.name), f);
        });
        for (const auto& [s, f] : cached_)
            if (s == sel) return &f;
        return nullptr;
    }

private:
    mutable std::once_flag index_once_;
    mutable std::vector<std::pair<abi::Selector, FunctionSpec>> cached_;
};

class BlueprintRegistry {
public:
    void add(std::shared_ptr<const NativeContract> bp)
    {
        std::string key(bp->name());
        blueprints_[key] = std::move(bp);
    }
    const NativeContract* find(std::string_view name) const
    {
        auto it = blueprints_.find(std::string(name));
        return it == blueprints_.end() ? nullptr : it->second.get();
    }
    std::map<std::string, std::uint64_t> code_sizes() const
    {
        std::map<std::string, std::uint64_t> out;
        for (const auto& [k, v] : blueprints_) out[k] = v->code_size();
        return out;
    }

private:
    std::unordered_map<std::string, std::shared_ptr<const NativeContract>> blueprints_;
};

} // namespace dacc::ledger
