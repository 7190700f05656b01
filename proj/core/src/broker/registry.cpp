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

#include "wms/broker/registry.hpp"

#include <algorithm>
#include <mutex>

#include <spdlog/spdlog.h>

#include "wms/classad/eval.hpp"
#include "wms/error.hpp"
#include "wms/util/fs.hpp"
#include "wms/util/time.hpp"

namespace wms::broker {

using classad::ClassAd;
using classad::Value;

namespace {

Value attr(const ClassAd& ad, std::string_view name) {
  return classad::evaluateAttr(name, classad::MatchContext(ad));
}

std::optional<Resource> toResource(const ClassAd& ad) {
  if (!checkResourceAd(ad).empty()) return std::nullopt;
  Resource r;
  r.id = *ad.getString("Id");
  r.isCE = util::iequals(*ad.getString("Type"), "CE");
  r.ad = ad;
  r.lastUpdate = ad.getInteger("LastUpdate").value_or(0);
  return r;
}

}  // namespace

std::vector<std::string> checkResourceAd(const ClassAd& ad) {
  std::vector<std::string> v;
  Value id = attr(ad, "Id");
  if (!id.isString() || id.asString().empty()) v.push_back("Id must be a non-empty string");
  else if (id.asString().find('/') != std::string::npos || id.asString()[0] == '.')
    v.push_back("Id '" + id.asString() + "' is not a valid resource name");
  Value type = attr(ad, "Type");
  bool ce = type.isString() && util::iequals(type.asString(), "CE");
  bool se = type.isString() && util::iequals(type.asString(), "SE");
  if (!ce && !se) v.push_back("Type must be \"CE\" or \"SE\"");

  auto integer = [&](const char* name, std::int64_t min, bool required) -> std::optional<std::int64_t> {
    if (!ad.contains(name)) {
      if (required) v.push_back(std::string(name) + " is required");
      return std::nullopt;
    }
    Value x = attr(ad, name);
    if (!x.isInteger()) {
      v.push_back(std::string(name) + " must be an integer");
      return std::nullopt;
    }
    if (x.asInteger() < min) {
      v.push_back(std::string(name) + " must be >= " + std::to_string(min));
      return std::nullopt;
    }
    return x.asInteger();
  };

  if (ce) {
    Value status = attr(ad, "Status");
    if (!status.isString()) v.push_back("Status must be a string");
    auto freeCpus = integer("FreeCPUs", 0, true);
    auto total = integer("TotalCPUs", 1, true);
    if (freeCpus && total && *freeCpus > *total) v.push_back("FreeCPUs must not exceed TotalCPUs");
    integer("PricePerCpuSecond", 0, false);
    if (ad.contains("CloseSEs")) {
      Value close = attr(ad, "CloseSEs");
      bool ok = close.isList();
      if (ok)
        for (const auto& x : close.asList()) ok = ok && x.isString();
      if (!ok) v.push_back("CloseSEs must be a list of SE ids");
    }
    if (ad.contains("OwnerGroup") && !attr(ad, "OwnerGroup").isString()) v.push_back("OwnerGroup must be a string");
  }
  if (se) integer("AvailableSpace", 0, true);
  return v;
}

Registry::Registry(fs::path backingDir) : dir_(std::move(backingDir)) {
  std::error_code ec;
  fs::create_directories(*dir_, ec);
  if (ec) throw Error(Errc::StorageError, "create registry '" + dir_->string() + "': " + ec.message());
}

void Registry::upsert(ClassAd ad) {
  auto violations = checkResourceAd(ad);
  if (!violations.empty()) {
    std::string msg;
    for (const auto& x : violations) msg += (msg.empty() ? "" : "; ") + x;
    throw Error(Errc::InvalidAd, msg);
  }
  ad.set("LastUpdate", Value(util::nowMs()));
  auto r = toResource(ad);
  std::unique_lock lock(mu_);
  if (dir_) util::writeFileAtomic(*dir_ / (r->id + ".ad"), classad::unparse(ad) + "\n");
  resources_[r->id] = std::move(*r);
}

std::size_t Registry::loadFixtures(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& de : fs::directory_iterator(dir))
    if (de.path().extension() == ".ad") files.push_back(de.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    try {
      upsert(classad::parseAd(util::readFile(f)));
    } catch (const Error& e) {
      throw Error(e.code(), f.filename().string() + ": " + e.what());
    }
  }
  return files.size();
}

void Registry::reload() const {
  if (!dir_) return;
  std::map<std::string, Resource> fresh;
  std::error_code ec;
  for (const auto& de : fs::directory_iterator(*dir_, ec)) {
    if (de.path().extension() != ".ad") continue;
    try {
      if (auto r = toResource(classad::parseAd(util::readFile(de.path())))) fresh[r->id] = std::move(*r);
    } catch (const Error& e) {
      spdlog::warn("registry: skipping {}: {}", de.path().string(), e.what());
    }
  }
  std::unique_lock lock(mu_);
  resources_ = std::move(fresh);
}

Snapshot Registry::all() const {
  reload();
  std::shared_lock lock(mu_);
  Snapshot out;
  for (const auto& [id, r] : resources_) out.push_back(r);
  return out;
}

Snapshot Registry::snapshot() const {
  const std::int64_t now = util::nowMs();
  Snapshot out;
  for (auto& r : all())
    if (now - r.lastUpdate <= ttlMs_) out.push_back(std::move(r));
  return out;
}

std::optional<Resource> Registry::get(const std::string& id) const {
  for (auto& r : all())
    if (r.id == id) return r;
  return std::nullopt;
}

}  // namespace wms::broker
