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
#include <utility>
#include <vector>

#include "wms/jdl/job.hpp"

namespace wms::jdl {

struct DagDescription {
  classad::ClassAd ad;
  std::map<std::string, JobDescription> nodes;
  std::vector<std::pair<std::string, std::string>> dependencies;  // (parent, child)
  std::optional<std::string> aggregatorNode;

  std::vector<std::string> parents(const std::string& node) const;
  std::vector<std::string> children(const std::string& node) const;
  /// Union of node input sandboxes, sorted and de-duplicated.
  std::vector<std::string> inputSandbox() const;

  std::string text() const { return classad::unparse(ad); }
};

/// True when the ad has Type = "DAG".
bool isDagAd(const classad::ClassAd& ad);

Validated<DagDescription> validateDag(const classad::ClassAd& ad);
Validated<DagDescription> validateDagText(std::string_view text);

/// Builds a DAG ad from parts; used by job partitioning.
classad::ClassAd makeDagAd(const std::vector<std::pair<std::string, classad::ClassAd>>& nodes,
                           const std::vector<std::pair<std::string, std::string>>& dependencies,
                           const std::optional<std::string>& aggregator);

}  // namespace wms::jdl
