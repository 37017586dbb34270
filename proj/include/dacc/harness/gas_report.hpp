#pragma once

#include <cmath>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "dacc/ledger/gas.hpp"

namespace dacc::harness {

struct GasEntry {
    std::string label;
    std::uint64_t gas_used = 0;     // total over all transactions of the step
    std::uint64_t transactions = 1;
    std::optional<std::uint64_t> baseline; // published reference figure, per transaction

    std::uint64_t per_transaction() const noexcept { return transactions ? gas_used / transactions : 0; }

    /// Relative deviation of the per-transaction cost from the baseline, in percent.
    std::optional<double> deviation_percent() const
    {
        if (!baseline || *baseline == 0) return std::nullopt;
        return (static_cast<double>(per_transaction()) - static_cast<double>(*baseline)) /
               static_cast<double>(*baseline) * 100.0;
    }
};

class GasReport {
public:
    GasReport() = default;
    explicit GasReport(ledger::GasPrice price) : price_(price) {}

    void add(GasEntry e) { entries_.push_back(std::move(e)); }

    const std::vector<GasEntry>& entries() const noexcept { return entries_; }
    const ledger::GasPrice& price() const noexcept { return price_; }

    const GasEntry* find(std::string_view label) const
    {
        for (const auto& e : entries_)
            if (e.label == label) return &e;
        return nullptr;
    }

    nlohmann::json to_json() const
    {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& e : entries_) {
            nlohmann::json r = {{"label", e.label},
                                {"gasUsed", e.gas_used},
                                {"transactions", e.transactions},
                                {"gasPerTransaction", e.per_transaction()},
                                {"eth", price_.eth(e.gas_used)},
                                {"eur", price_.eur(e.gas_used)}};
            if (e.baseline) {
                r["referenceGas"] = *e.baseline;
                r["deviationPercent"] = round2(*e.deviation_percent());
            }
            rows.push_back(std::move(r));
        }
        return {{"ethPerMillionGas", price_.eth_per_million_gas}, {"eurPerEth", price_.eur_per_eth}, {"entries", rows}};
    }

    std::string to_text() const
    {
        std::ostringstream os;
        os << std::left << std::setw(28) << "label" << std::right << std::setw(12) << "gas/tx" << std::setw(6) << "txs"
           << std::setw(12) << "reference" << std::setw(10) << "dev %" << std::setw(12) << "ETH" << std::setw(10) << "EUR"
           << '\n';
        for (const auto& e : entries_) {
            os << std::left << std::setw(28) << e.label << std::right << std::setw(12) << e.per_transaction()
               << std::setw(6) << e.transactions;
            if (e.baseline)
                os << std::setw(12) << *e.baseline << std::setw(10) << std::fixed << std::setprecision(1)
                   << *e.deviation_percent();
            else
                os << std::setw(12) << "-" << std::setw(10) << "-";
            os << std::setw(12) << std::fixed << std::setprecision(6) << price_.eth(e.gas_used) << std::setw(10)
               << std::setprecision(4) << price_.eur(e.gas_used) << '\n';
        }
        return os.str();
    }

private:
    ledger::GasPrice price_;
    std::vector<GasEntry> entries_;

    static double round2(double v) { return std::round(v * 100.0) / 100.0; }
};

} // namespace dacc::harness
