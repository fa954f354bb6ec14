#pragma once

// JSON documents for every exchanged artifact. Numbers are written with the
// shortest representation that round-trips to the same double.

#include <json.hpp>
#include <string>

#include "fedstab/clustering_opt.hpp"
#include "fedstab/dynamics.hpp"
#include "fedstab/gains.hpp"
#include "fedstab/hedonic.hpp"
#include "fedstab/learning.hpp"
#include "fedstab/stable_set.hpp"

namespace fedstab::io {

using Json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.3.1";

// Canonical text: sorted keys, two-space indent, trailing newline.
std::string dump(const Json& doc);
// FNV-1a 64 of the bytes, as 16 lowercase hex digits.
std::string content_hash(const std::string& bytes);

Json to_json(const Scenario& scenario);
Scenario scenario_from_json(const Json& doc);
std::string scenario_hash(const Scenario& scenario);

Json to_json(const GainReport& report);
GainReport gain_report_from_json(const Json& doc);

Json to_json(const AllocationTable& phi);
AllocationTable allocation_from_json(const Json& doc);

Json to_json(const MutualGainVector& v);
MutualGainVector mutual_gains_from_json(const Json& doc);

Json to_json(const Partition& partition);
Partition partition_from_json(const Json& doc, int n);

Json to_json(const StabilityCertificate& certificate);
Json to_json(const StableSetResult& result);
Json to_json(const ClusteringSolution& solution);
Json to_json(const lp::Solution& solution, const lp::Certificate& certificate);

Json to_json(const DynamicsStep& step);
Json trace_footer(const DynamicsTrace& trace);
// One JSON object per line: each step, then the footer record.
std::string trace_to_jsonl(const DynamicsTrace& trace);

// {tool_version, scenario_hash, seed}
Json provenance(const Scenario& scenario);

}  // namespace fedstab::io
