#pragma once

#include "dacc/common/bytes.hpp"
#include "dacc/common/error.hpp"
#include "dacc/compiler/compile.hpp"
#include "dacc/compiler/engine.hpp"
#include "dacc/compiler/inspect.hpp"
#include "dacc/contracts/controller_contract.hpp"
#include "dacc/contracts/registry.hpp"
#include "dacc/contracts/subject_contract.hpp"
#include "dacc/crypto/keys.hpp"
#include "dacc/crypto/sha3.hpp"
#include "dacc/harness/audit.hpp"
#include "dacc/harness/gas_report.hpp"
#include "dacc/harness/runner.hpp"
#include "dacc/harness/scenario.hpp"
#include "dacc/ledger/chain_io.hpp"
#include "dacc/ledger/ledger.hpp"
#include "dacc/ledger/verify.hpp"
#include "dacc/policy/interpreter.hpp"
#include "dacc/policy/parser.hpp"
#include "dacc/policy/printer.hpp"
#include "dacc/policy/template.hpp"
#include "dacc/provenance/commitment.hpp"
#include "dacc/provenance/data_model.hpp"
#include "dacc/provenance/graph.hpp"
