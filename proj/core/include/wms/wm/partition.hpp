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

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "wms/jdl/dag.hpp"
#include "wms/lb/store.hpp"

namespace wms::wm {

inline constexpr const char* kAggregatorNode = "aggregator";

/// Contiguous half-open ranges covering [0, jobSteps); sizes differ by at most 1,
/// larger ranges first. Requires 1 <= subJobs <= jobSteps.
std::vector<std::pair<std::int64_t, std::int64_t>> splitSteps(std::int64_t jobSteps, std::int64_t subJobs);

/// Sub-jobs n0..n{k-1} (Checkpointable, StepFirst/StepLast inclusive) plus an
/// aggregator node depending on all of them. Throws Error(ValidationFailed).
jdl::DagDescription partitionJob(const jdl::JobDescription& job, const std::string& parentId);

/// Node name of a DAG node job id `<dagId>.<node>`.
std::string nodeNameOf(const std::string& jobId);

/// Latest state of each sub-job, variables namespaced `<node>.<var>`,
/// sorted by (node, var). Throws Error(SubJobIncomplete) naming offenders.
lb::StatePairs mergeStates(const lb::Store& store, const std::vector<std::string>& subJobIds);

}  // namespace wms::wm
