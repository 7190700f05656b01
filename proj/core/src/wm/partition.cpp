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

#include "wms/wm/partition.hpp"

#include <algorithm>

#include "wms/classad/eval.hpp"
#include "wms/error.hpp"

namespace wms::wm {

using classad::ClassAd;
using classad::Value;

std::vector<std::pair<std::int64_t, std::int64_t>> splitSteps(std::int64_t jobSteps, std::int64_t subJobs) {
  if (subJobs < 1 || jobSteps < subJobs) throw Error(Errc::ValidationFailed, "subJobs ≤ jobSteps");
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  const std::int64_t base = jobSteps / subJobs, extra = jobSteps % subJobs;
  std::int64_t start = 0;
  for (std::int64_t i = 0; i < subJobs; ++i) {
    std::int64_t len = base + (i < extra ? 1 : 0);
    out.emplace_back(start, start + len);
    start += len;
  }
  return out;
}

jdl::DagDescription partitionJob(const jdl::JobDescription& job, const std::string& parentId) {
  if (job.jobType != jdl::JobType::Partitionable || !job.jobSteps || !job.subJobs)
    throw Error(Errc::ValidationFailed, "only Partitionable jobs with JobSteps and SubJobs can be partitioned");
  auto ranges = splitSteps(*job.jobSteps, *job.subJobs);

  std::vector<std::pair<std::string, ClassAd>> nodes;
  std::vector<std::pair<std::string, std::string>> deps;
  std::string aggregateArgs = "aggregate";
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    std::string name = "n" + std::to_string(i);
    ClassAd node = job.ad;
    node.erase("SubJobs");
    node.erase("SubmitTo");
    node.erase("ChosenSE");
    node.set("JobType", Value("Checkpointable"));
    node.set("StepFirst", Value(ranges[i].first));
    node.set("StepLast", Value(ranges[i].second - 1));
    nodes.emplace_back(name, std::move(node));
    deps.emplace_back(name, kAggregatorNode);
    aggregateArgs += " " + parentId + "." + name;
  }
  ClassAd agg;
  agg.set("Executable", Value("wms-chkpt"));
  agg.set("Arguments", Value(aggregateArgs));
  if (const auto* req = job.ad.lookup("Requirements")) agg.set("Requirements", *req);
  agg.set("RetryCount", Value(static_cast<std::int64_t>(job.retryCount)));
  nodes.emplace_back(kAggregatorNode, std::move(agg));

  auto v = jdl::validateDag(jdl::makeDagAd(nodes, deps, std::string(kAggregatorNode)));
  if (!v.ok()) throw Error(Errc::ValidationFailed, "partition produced an invalid DAG: " + jdl::describe(v.violations));
  return std::move(*v.value);
}

std::string nodeNameOf(const std::string& jobId) {
  auto dot = jobId.rfind('.');
  return dot == std::string::npos ? jobId : jobId.substr(dot + 1);
}

lb::StatePairs mergeStates(const lb::Store& store, const std::vector<std::string>& subJobIds) {
  std::vector<std::string> offenders;
  std::vector<std::pair<std::string, lb::StatePairs>> finals;
  for (const auto& id : subJobIds) {
    auto r = store.find(id);
    if (!r || r->state != lb::JobState::DONE_OK || r->checkpointStates.empty()) {
      offenders.push_back(id);
      continue;
    }
    finals.emplace_back(nodeNameOf(id), r->checkpointStates.back().pairs);
  }
  if (!offenders.empty()) {
    std::string list;
    for (const auto& o : offenders) list += (list.empty() ? "" : ", ") + o;
    throw Error(Errc::SubJobIncomplete, "sub-jobs not finished with a saved state: " + list);
  }
  lb::StatePairs out;
  for (const auto& [node, pairs] : finals)
    for (const auto& [k, v] : pairs) out.emplace_back(node + "." + k, v);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace wms::wm
