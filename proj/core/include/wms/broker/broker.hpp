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
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "wms/broker/registry.hpp"
#include "wms/jdl/job.hpp"

namespace wms::broker {

struct MatchResult {
  std::string jobId;
  std::string ceId;
  double rank = 0.0;
  std::optional<std::string> seId;
  std::string strategy;
};

struct Candidate {
  std::string ceId;
  std::optional<std::string> seId;
  double rank = 0.0;
};

/// Picks one of the ranked candidates (rank descending, Id ascending; never empty).
class Strategy {
 public:
  virtual ~Strategy() = default;
  virtual std::size_t choose(const std::vector<Candidate>& ranked, std::optional<std::uint64_t> seed) const = 0;
};

using StrategyFactory = std::function<std::unique_ptr<Strategy>()>;

/// Adds or replaces a strategy under `name`. "best" and "fuzzy" are built in.
void registerStrategy(const std::string& name, StrategyFactory factory);
/// Throws Error(UnknownStrategy), or Error(Unsupported) for "economic".
std::unique_ptr<Strategy> makeStrategy(const std::string& name);
std::vector<std::string> strategyNames();

/// Fraction of the best rank a candidate needs to be eligible for "fuzzy".
inline constexpr double kFuzzyFraction = 0.9;

std::vector<std::string> findMatches(const classad::ClassAd& job, const Snapshot& snap);
std::vector<std::pair<std::string, double>> rankMatches(const classad::ClassAd& job, const std::vector<std::string>& ceIds,
                                                        const Snapshot& snap);

/// True when the job's Requirements refer to the `se` scope.
bool needsGangMatch(const classad::ClassAd& job);

/// All (CE, SE) pairs with SE close to CE and the job's Requirements true
/// under {self: job, other: ce, ce, se}; ranked like rankMatches.
std::vector<Candidate> gangCandidates(const classad::ClassAd& job, const Snapshot& snap);

struct SelectOptions {
  std::string strategy = "best";
  std::optional<std::uint64_t> seed;
  std::string jobId;
  /// CE ids to avoid (e.g. where a previous attempt failed); ignored when
  /// excluding them would leave no candidate.
  std::set<std::string> exclude;
};

/// Throws Error(NoMatchingResources), Error(UnknownStrategy), Error(Unsupported).
MatchResult selectResource(const classad::ClassAd& job, const Snapshot& snap, const SelectOptions& opts = {});
MatchResult gangMatch(const classad::ClassAd& job, const Snapshot& snap, const SelectOptions& opts = {});
/// gangMatch when the job needs it, selectResource otherwise.
MatchResult match(const classad::ClassAd& job, const Snapshot& snap, const SelectOptions& opts = {});

struct Resolution {
  bool ok = false;
  std::string jdl;                    // augmented JDL when ok
  std::optional<MatchResult> result;  // absent when the JDL was already resolved
  std::string failureCode;            // e.g. "NoMatchingResources"
  std::string failureMessage;
};

/// Helper interface: returns the JDL with SubmitTo (and ChosenSE) added.
/// Already-resolved JDL comes back unchanged; failures are reported in the
/// result rather than thrown.
Resolution helperResolve(std::string_view jdlText, const Snapshot& snap, const SelectOptions& opts = {});

}  // namespace wms::broker
