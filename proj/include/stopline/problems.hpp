#pragma once

#include "stopline/problem.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace stopline {

std::vector<std::string> catalog_ids();

/// Built-in problem by id; throws Error(UnknownId).
ProblemSpec catalog(const std::string& id);

/// Builds a spec from an inline problem object (keys documented in
/// docs/catalog.md), runs the regularity and gain audits on the truncated
/// domain, and, when `resolved` is given, stores the object with every
/// default made explicit. Throws SchemaError(path), parse errors prefixed
/// with the offending path, Error(RegularityFail) and Error(GainAuditFail).
ProblemSpec from_config(const nlohmann::json& problem, nlohmann::ordered_json* resolved = nullptr);

}  // namespace stopline
