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
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "wms/classad/classad.hpp"

namespace wms::broker {

namespace fs = std::filesystem;

struct Resource {
  std::string id;
  bool isCE = true;
  classad::ClassAd ad;
  std::int64_t lastUpdate = 0;  // UTC ms
};

using Snapshot = std::vector<Resource>;  // Id ascending

/// Violations of the resource ad conventions; empty when valid.
std::vector<std::string> checkResourceAd(const classad::ClassAd& ad);

/// Information registry. In-memory, or backed by a directory of `<Id>.ad`
/// files so that several processes (executor heartbeats, WM matching)
/// share one view.
class Registry {
 public:
  static constexpr std::int64_t kDefaultTtlMs = 120'000;

  Registry() = default;
  explicit Registry(fs::path backingDir);

  /// Throws Error(InvalidAd) listing every violation.
  void upsert(classad::ClassAd ad);
  /// Loads every `*.ad` file of a fixture directory. Returns the number loaded.
  std::size_t loadFixtures(const fs::path& dir);

  /// Fresh resources only (lastUpdate within the TTL), Id ascending.
  Snapshot snapshot() const;
  /// Every resource, stale ones included.
  Snapshot all() const;
  std::optional<Resource> get(const std::string& id) const;

  void setTtlMs(std::int64_t ttl) { ttlMs_ = ttl; }
  std::int64_t ttlMs() const { return ttlMs_; }

 private:
  void reload() const;

  std::optional<fs::path> dir_;
  std::int64_t ttlMs_ = kDefaultTtlMs;
  mutable std::shared_mutex mu_;
  mutable std::map<std::string, Resource> resources_;
};

}  // namespace wms::broker
