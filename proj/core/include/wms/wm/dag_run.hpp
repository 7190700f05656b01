/***************************************************************
 *
 * Copyright (C) 2026, The gridwms Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License"); you
 * may not use this file except in compliance with the License.  You may
 * obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 ***************************************************************/

#pragma once

#include <map>
#include <optional>
#include <string>

#include "wms/jdl/dag.hpp"
#include "wms/lb/store.hpp"

namespace wms::wm {

enum class NodeStatus { Idle, Ready, Submitted, Done, Failed, Unreachable };

std::string_view toString(NodeStatus s);

inline std::string nodeJobId(const std::string& dagId, const std::string& node) { return dagId + "." + node; }

/// Reason recorded on node jobs that can never run.
inline constexpr const char* kUnreachableReason = "unreachable";

/// The DAG a job expands to: its own DAG, or the partition of a
/// Partitionable job. nullopt for ordinary jobs.
std::optional<jdl::DagDescription> dagFor(const std::string& jobId, const std::string& jdlText);

/// Node states derived from the node jobs' LB records. A node is Ready iff
/// it is Idle and all parents are Done; Idle nodes below a Failed or
/// Unreachable node are Unreachable.
std::map<std::string, NodeStatus> dagNodeStatus(const lb::Store& store, const std::string& dagId,
                                                const jdl::DagDescription& dag);

}  // namespace wms::wm
