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

#include "wms/broker/broker.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <random>

#include "wms/classad/eval.hpp"
#include "wms/error.hpp"

namespace wms::broker {

using classad::ClassAd;
using classad::MatchContext;
using classad::Value;

namespace {

class BestStrategy final : public Strategy {
 public:
  std::size_t choose(const std::vector<Candidate>&, std::optional<std::uint64_t>) const override { return 0; }
};

class FuzzyStrategy final : public Strategy {
 public:
  std::size_t choose(const std::vector<Candidate>& ranked, std::optional<std::uint64_t> seed) const override {
    const double max = ranked.front().rank;
    // Same as kFuzzyFraction * max for non-negative ranks, and still a band
    // below the maximum when ranks are negative.
    const double threshold = max - (1.0 - kFuzzyFraction) * std::fabs(max);
    std::size_t eligible = 0;
    while (eligible < ranked.size() && ranked[eligible].rank >= threshold) ++eligible;
    std::mt19937_64 rng(seed ? *seed : std::random_device{}());
    return std::uniform_int_distribution<std::size_t>(0, eligible - 1)(rng);
  }
};

std::mutex& strategiesMutex() {
  static std::mutex mu;
  return mu;
}

std::map<std::string, StrategyFactory>& strategies() {
  static std::map<std::string, StrategyFactory> m = {
      {"best", [] { return std::make_unique<BestStrategy>(); }},
      {"fuzzy", [] { return std::make_unique<FuzzyStrategy>(); }},
  };
  return m;
}

void sortRanked(std::vector<Candidate>& c) {
  std::stable_sort(c.begin(), c.end(), [](const Candidate& a, const Candidate& b) {
    if (a.rank != b.rank) return a.rank > b.rank;
    if (a.ceId != b.ceId) return a.ceId < b.ceId;
    return a.seId.value_or("") < b.seId.value_or("");
  });
}

const Resource* byId(const Snapshot& snap, const std::string& id) {
  for (const auto& r : snap)
    if (r.id == id) return &r;
  return nullptr;
}

MatchResult choose(std::vector<Candidate> ranked, const SelectOptions& opts) {
  auto strategy = makeStrategy(opts.strategy);
  if (ranked.empty()) throw Error(Errc::NoMatchingResources, "no resource satisfies the job requirements");
  if (!opts.exclude.empty()) {
    std::vector<Candidate> kept;
    for (const auto& c : ranked)
      if (!opts.exclude.count(c.ceId)) kept.push_back(c);
    if (!kept.empty()) ranked = std::move(kept);
  }
  const Candidate& c = ranked.at(strategy->choose(ranked, opts.seed));
  return MatchResult{opts.jobId, c.ceId, c.rank, c.seId, opts.strategy};
}

}  // namespace

void registerStrategy(const std::string& name, StrategyFactory factory) {
  std::lock_guard lock(strategiesMutex());
  strategies()[name] = std::move(factory);
}

std::unique_ptr<Strategy> makeStrategy(const std::string& name) {
  std::lock_guard lock(strategiesMutex());
  auto it = strategies().find(name);
  if (it != strategies().end()) return it->second();
  if (name == "economic") throw Error(Errc::Unsupported, "the economic strategy is not supported");
  throw Error(Errc::UnknownStrategy, "unknown strategy '" + name + "'");
}

std::vector<std::string> strategyNames() {
  std::lock_guard lock(strategiesMutex());
  std::vector<std::string> out;
  for (const auto& [name, f] : strategies()) out.push_back(name);
  return out;
}

std::vector<std::string> findMatches(const ClassAd& job, const Snapshot& snap) {
  std::vector<std::string> out;
  for (const auto& r : snap)
    if (r.isCE && classad::matchTwo(job, r.ad)) out.push_back(r.id);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::pair<std::string, double>> rankMatches(const ClassAd& job, const std::vector<std::string>& ceIds,
                                                        const Snapshot& snap) {
  std::vector<Candidate> c;
  for (const auto& id : ceIds) {
    const Resource* r = byId(snap, id);
    if (!r) continue;
    c.push_back({id, std::nullopt, classad::rankOf(job, r->ad).value});
  }
  sortRanked(c);
  std::vector<std::pair<std::string, double>> out;
  for (const auto& x : c) out.emplace_back(x.ceId, x.rank);
  return out;
}

bool needsGangMatch(const ClassAd& job) {
  const classad::Expr* req = job.lookup("Requirements");
  return req && classad::referencesScope(*req, "se");
}

std::vector<Candidate> gangCandidates(const ClassAd& job, const Snapshot& snap) {
  std::vector<Candidate> out;
  for (const auto& ce : snap) {
    if (!ce.isCE) continue;
    Value close = classad::evaluateAttr("CloseSEs", MatchContext(ce.ad));
    if (!close.isList()) continue;
    for (const auto& se : snap) {
      if (se.isCE) continue;
      bool isClose = std::any_of(close.asList().begin(), close.asList().end(),
                                 [&](const Value& v) { return v.isString() && v.asString() == se.id; });
      if (!isClose) continue;
      MatchContext ctx(job, ce.ad);
      ctx.bind("ce", ce.ad).bind("se", se.ad);
      Value ok = job.contains("Requirements") ? classad::evaluateAttr("Requirements", ctx) : Value(true);
      if (!ok.isTrue()) continue;
      out.push_back({ce.id, se.id, classad::rankIn(ctx).value});
    }
  }
  sortRanked(out);
  return out;
}

MatchResult selectResource(const ClassAd& job, const Snapshot& snap, const SelectOptions& opts) {
  std::vector<Candidate> c;
  for (const auto& [id, rank] : rankMatches(job, findMatches(job, snap), snap)) c.push_back({id, std::nullopt, rank});
  return choose(std::move(c), opts);
}

MatchResult gangMatch(const ClassAd& job, const Snapshot& snap, const SelectOptions& opts) {
  return choose(gangCandidates(job, snap), opts);
}

MatchResult match(const ClassAd& job, const Snapshot& snap, const SelectOptions& opts) {
  return needsGangMatch(job) ? gangMatch(job, snap, opts) : selectResource(job, snap, opts);
}

Resolution helperResolve(std::string_view jdlText, const Snapshot& snap, const SelectOptions& opts) {
  Resolution res;
  auto v = jdl::validateJobText(jdlText);
  if (!v.ok()) {
    res.failureCode = "ValidationFailed";
    res.failureMessage = jdl::describe(v.violations);
    return res;
  }
  if (v.value->submitTo) {
    res.ok = true;
    res.jdl = std::string(jdlText);
    return res;
  }
  try {
    MatchResult m = match(v.value->ad, snap, opts);
    ClassAd out = classad::parseAd(jdlText);
    out.set("SubmitTo", Value(m.ceId));
    if (m.seId) out.set("ChosenSE", Value(*m.seId));
    res.ok = true;
    res.jdl = classad::unparse(out);
    res.result = std::move(m);
  } catch (const Error& e) {
    res.failureCode = std::string(toString(e.code()));
    res.failureMessage = e.what();
  }
  return res;
}

}  // namespace wms::broker
