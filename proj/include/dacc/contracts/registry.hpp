#pragma once

#include "dacc/contracts/controller_contract.hpp"

namespace dacc::contracts {

struct CodeSizes {
    std::uint64_t subject = SubjectContract::default_code_size;
    std::uint64_t controller = ControllerContract::default_code_size;
};

/// Registry with both contract blueprints.
inline ledger::BlueprintRegistry make_registry(const CodeSizes& sizes = {})
{
    ledger::BlueprintRegistry r;
    r.add(std::make_shared<SubjectContract>(sizes.subject));
    r.add(std::make_shared<ControllerContract>(sizes.controller));
    return r;
}

} // namespace dacc::contracts
