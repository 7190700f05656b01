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

#include "wms/jdl/dag.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "wms/classad/eval.hpp"
#include "wms/error.hpp"
#include "wms/util/fs.hpp"

namespace wms::jdl {

using classad::ClassAd;
using classad::Value;

std::vector<std::string> DagDescription::parents(const std::string& node) const {
  std::vector<std::string> out;
  for (const auto& [p, c] : dependencies)
    if (c == node) out.push_back(p);
  return out;
}

std::vector<std::string> DagDescription::children(const std::string& node) const {
  std::vector<std::string> out;
  for (const auto& [p, c] : dependencies)
    if (p == node) out.push_back(c);
  return out;
}

std::vector<std::string> DagDescription::inputSandbox() const {
  std::set<std::string> all;
  for (const auto& [name, job] : nodes) all.insert(job.inputSandbox.begin(), job.inputSandbox.end());
  return {all.begin(), all.end()};
}

bool isDagAd(const ClassAd& ad) {
  auto t = ad.getString("Type");
  return t && util::iequals(*t, "dag");
}

namespace {

// Depth-first search; returns one cycle as a node path (first == last) if any.
std::optional<std::vector<std::string>> findCycle(const std::map<std::string, JobDescription>& nodes,
                                                  const std::vector<std::pair<std::string, std::string>>& edges) {
  std::map<std::string, int> color;  // 0 white, 1 grey, 2 black
  std::vector<std::string> stack;
  std::optional<std::vector<std::string>> cycle;

  std::function<void(const std::string&)> visit = [&](const std::string& n) {
    color[n] = 1;
    stack.push_back(n);
    for (const auto& [p, c] : edges) {
      if (cycle || p != n) continue;
      if (color[c] == 1) {
        auto it = std::find(stack.begin(), stack.end(), c);
        std::vector<std::string> path(it, stack.end());
        path.push_back(c);
        cycle = path;
        return;
      }
      if (color[c] == 0) visit(c);
    }
    stack.pop_back();
    color[n] = 2;
  };
  for (const auto& [name, job] : nodes) {
    if (cycle) break;
    if (color[name] == 0) visit(name);
  }
  return cycle;
}

}  // namespace

Validated<DagDescription> validateDag(const ClassAd& ad) {
  Validated<DagDescription> out;
  auto violate = [&](std::string code, std::string attr, std::string msg) {
    out.violations.push_back({std::move(code), std::move(attr), std::move(msg)});
  };

  if (!isDagAd(ad)) violate("type", "Type", "must be \"DAG\"");

  DagDescription dag;
  const classad::Expr* nodesExpr = ad.lookup("Nodes");
  const classad::AdExpr* nodesAd = nodesExpr ? std::get_if<classad::AdExpr>(&(*nodesExpr)->node) : nullptr;
  if (!nodesAd) {
    violate("missing", "Nodes", "must be a nested ad with one job ad per node");
  } else {
    for (const auto& entry : nodesAd->ad->entries()) {
      const auto* nodeAd = std::get_if<classad::AdExpr>(&entry.expr->node);
      if (!nodeAd) {
        violate("type", "Nodes." + entry.name, "node must be a nested job ad");
        continue;
      }
      auto job = validateJob(*nodeAd->ad);
      for (auto& v : job.violations) {
        v.attribute = "Nodes." + entry.name + (v.attribute.empty() ? "" : "." + v.attribute);
        out.violations.push_back(std::move(v));
      }
      for (auto& w : job.warnings) {
        w.attribute = "Nodes." + entry.name + "." + w.attribute;
        out.warnings.push_back(std::move(w));
      }
      if (job.value) {
        if (job.value->jobType == JobType::Partitionable)
          violate("unsupported", "Nodes." + entry.name, "partitionable jobs cannot be DAG nodes");
        dag.nodes.emplace(entry.name, std::move(*job.value));
      }
    }
    if (nodesAd->ad->empty()) violate("constraint", "Nodes", "a DAG needs at least one node");
  }

  // Case-insensitive resolution of node names to their declared spelling.
  auto resolve = [&](const std::string& name) -> std::optional<std::string> {
    if (!nodesAd) return std::nullopt;
    for (const auto& entry : nodesAd->ad->entries())
      if (util::iequals(entry.name, name)) return entry.name;
    return std::nullopt;
  };

  if (ad.contains("Dependencies")) {
    Value deps = classad::evaluateAttr("Dependencies", classad::MatchContext(ad));
    if (!deps.isList()) {
      violate("type", "Dependencies", "must be a list of {parent, child} pairs");
    } else {
      for (const auto& pair : deps.asList()) {
        if (!pair.isList() || pair.asList().size() != 2 || !pair.asList()[0].isString() ||
            !pair.asList()[1].isString()) {
          violate("type", "Dependencies", "each dependency must be {\"parent\", \"child\"}");
          continue;
        }
        const auto& p = pair.asList()[0].asString();
        const auto& c = pair.asList()[1].asString();
        auto rp = resolve(p), rc = resolve(c);
        if (!rp) violate("unknown-node", "Dependencies", "unknown parent node '" + p + "'");
        if (!rc) violate("unknown-node", "Dependencies", "unknown child node '" + c + "'");
        if (rp && rc) dag.dependencies.emplace_back(*rp, *rc);
      }
    }
  }

  if (auto agg = ad.getString("Aggregator")) {
    if (auto r = resolve(*agg)) dag.aggregatorNode = *r;
    else violate("unknown-node", "Aggregator", "unknown aggregator node '" + *agg + "'");
  } else if (ad.contains("Aggregator")) {
    violate("type", "Aggregator", "must be a node name string");
  }

  if (auto cycle = findCycle(dag.nodes, dag.dependencies)) {
    std::string path;
    for (const auto& n : *cycle) path += (path.empty() ? "" : " -> ") + n;
    violate("cycle", "Dependencies", "dependency cycle: " + path);
  }

  if (out.violations.empty()) {
    // Normalize node ads so downstream consumers see the defaults.
    ClassAd normalized = ad;
    ClassAd nodes;
    for (const auto& entry : nodesAd->ad->entries())
      nodes.set(entry.name, classad::makeAd(dag.nodes.at(entry.name).ad));
    normalized.set("Nodes", classad::makeAd(std::move(nodes)));
    dag.ad = std::move(normalized);
    out.value = std::move(dag);
  }
  return out;
}

Validated<DagDescription> validateDagText(std::string_view text) {
  try {
    return validateDag(classad::parseAd(text));
  } catch (const Error& e) {
    Validated<DagDescription> out;
    out.violations.push_back({"syntax", "", e.what()});
    return out;
  }
}

ClassAd makeDagAd(const std::vector<std::pair<std::string, ClassAd>>& nodes,
                  const std::vector<std::pair<std::string, std::string>>& dependencies,
                  const std::optional<std::string>& aggregator) {
  ClassAd ad;
  ad.set("Type", Value("DAG"));
  ClassAd nodeAd;
  for (const auto& [name, job] : nodes) nodeAd.set(name, classad::makeAd(job));
  ad.set("Nodes", classad::makeAd(std::move(nodeAd)));
  std::vector<classad::Expr> deps;
  for (const auto& [p, c] : dependencies)
    deps.push_back(classad::makeList({classad::makeLiteral(Value(p)), classad::makeLiteral(Value(c))}));
  ad.set("Dependencies", classad::makeList(std::move(deps)));
  if (aggregator) ad.set("Aggregator", Value(*aggregator));
  return ad;
}

}  // namespace wms::jdl
