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

#include "wms/util/crash.hpp"

#include <csignal>
#include <cstdlib>
#include <map>
#include <mutex>
#include <string>

#include <spdlog/spdlog.h>

namespace wms::util {

namespace {

struct CrashPlan {
  std::map<std::string, int, std::less<>> fireAt;  // name -> hit number
  std::map<std::string, int, std::less<>> hits;
  std::mutex mu;

  CrashPlan() {
    const char* env = std::getenv("WMS_CRASH_AT");
    if (!env) return;
    std::string text(env);
    std::size_t pos = 0;
    while (pos <= text.size()) {
      auto comma = text.find(',', pos);
      std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      if (!item.empty()) {
        int n = 1;
        if (auto at = item.find('@'); at != std::string::npos) {
          n = std::atoi(item.c_str() + at + 1);
          item.resize(at);
        }
        fireAt[item] = n;
      }
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }
};

CrashPlan& plan() {
  static CrashPlan p;
  return p;
}

}  // namespace

void crashPoint(std::string_view name) {
  auto& p = plan();
  if (p.fireAt.empty()) return;
  std::lock_guard lock(p.mu);
  auto it = p.fireAt.find(name);
  if (it == p.fireAt.end()) return;
  int& h = p.hits[std::string(name)];
  if (++h == it->second) {
    spdlog::warn("crash point '{}' reached, killing process", name);
    spdlog::default_logger()->flush();
    std::raise(SIGKILL);
  }
}

}  // namespace wms::util
