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

#include "wms/wm/dag_run.hpp"

#include "wms/error.hpp"

#include <functional>

#include "wms/wm/partition.hpp"

namespace wms::wm {

std::string_view toString(NodeStatus s) {
  switch (s) {
    case NodeStatus::Idle: return "Idle";
    case NodeStatus::Ready: return "Ready";
    case NodeStatus::Submitted: return "Submitted";
    case NodeStatus::Done: return "Done";
    case NodeStatus::Failed: return "Failed";
    case NodeStatus::Unreachable: return "Unreachable";
  }
  return "?";
}

std::optional<jdl::DagDescription> dagFor(const std::string& jobId, const std::string& jdlText) {
  classad::ClassAd ad;
  try {
    ad = classad::parseAd(jdlText);
  } catch (const Error&) {
    return std::nullopt;
  }
  if (jdl::isDagAd(ad)) {
    auto v = jdl::validateDag(ad);
    if (v.ok()) return std::move(*v.value);
    return std::nullopt;
  }
  auto job = jdl::validateJob(ad);
  if (job.ok() && job.value->jobType == jdl::JobType::Partitionable) return partitionJob(*job.value, jobId);
  return std::nullopt;
}

std::map<std::string, NodeStatus> dagNodeStatus(const lb::Store& store, const std::string& dagId,
                                                const jdl::DagDescription& dag) {
  std::map<std::string, NodeStatus> st;
  for (const auto& [name, job] : dag.nodes) {
    auto r = store.find(nodeJobId(dagId, name));
    NodeStatus s = NodeStatus::Idle;
    if (r) {
      switch (r->state) {
        case lb::JobState::DONE_OK: s = NodeStatus::Done; break;
        case lb::JobState::DONE_FAILED:
        case lb::JobState::CANCELLED:
        case lb::JobState::CLEARED: s = NodeStatus::Failed; break;
        case lb::JobState::ABORTED: {
          bool unreachable = false;
          for (const auto& e : r->events) {
            if (e.kind == lb::Kind::Aborted) {
              auto it = e.payload.find("reason");
              unreachable |= it != e.payload.end() && it->second == kUnreachableReason;
            }
          }
          bool budgetLeft = r->attempt <= job.retryCount;
          bool refused = false;
          for (const auto& e : r->events) refused |= e.kind == lb::Kind::Refused;
          if (unreachable) s = NodeStatus::Unreachable;
          else if (budgetLeft && !refused) s = NodeStatus::Submitted;  // resubmission pending
          else s = NodeStatus::Failed;
          break;
        }
        default: s = NodeStatus::Submitted; break;
      }
    }
    st[name] = s;
  }
  // Propagate in dependency order; the DAG is acyclic so memoized DFS terminates.
  std::map<std::string, bool> blocked;
  std::function<bool(const std::string&)> isBlocked = [&](const std::string& n) -> bool {
    if (auto it = blocked.find(n); it != blocked.end()) return it->second;
    bool b = false;
    for (const auto& p : dag.parents(n)) {
      if (st[p] == NodeStatus::Failed || st[p] == NodeStatus::Unreachable || isBlocked(p)) b = true;
    }
    blocked[n] = b;
    return b;
  };
  for (auto& [name, s] : st) {
    if (s != NodeStatus::Idle) continue;
    if (isBlocked(name)) {
      s = NodeStatus::Unreachable;
      continue;
    }
    bool ready = true;
    for (const auto& p : dag.parents(name)) ready &= st[p] == NodeStatus::Done;
    if (ready) s = NodeStatus::Ready;
  }
  return st;
}

}  // namespace wms::wm
