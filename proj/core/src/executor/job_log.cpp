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

#include "wms/executor/job_log.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <fstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "wms/error.hpp"
#include "wms/util/fs.hpp"
#include "wms/util/time.hpp"

namespace wms::executor {

namespace {
constexpr std::string_view kKindNames[] = {"Staged", "Committed", "Executing", "Terminated", "Aborted", "Cancelled"};
}

std::string_view toString(LogKind k) { return kKindNames[static_cast<int>(k)]; }

LogKind parseLogKind(std::string_view s) {
  for (int i = 0; i < 6; ++i)
    if (kKindNames[i] == s) return static_cast<LogKind>(i);
  throw Error(Errc::CorruptRecord, "unknown log record kind '" + std::string(s) + "'");
}

bool isTerminal(LogKind k) {
  return k == LogKind::Terminated || k == LogKind::Aborted || k == LogKind::Cancelled;
}

int LogRecord::attempt() const {
  auto it = data.find("attempt");
  if (it == data.end()) return 1;
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    return 1;
  }
}

std::string toLine(const LogRecord& r) {
  nlohmann::ordered_json j;
  j["ts"] = r.ts;
  j["handle"] = r.handle;
  j["jobId"] = r.jobId;
  j["kind"] = toString(r.kind);
  j["data"] = r.data;
  return j.dump();
}

LogRecord recordFromLine(std::string_view line) {
  auto j = nlohmann::json::parse(line, nullptr, false);
  if (!j.is_object()) throw Error(Errc::CorruptRecord, "job log line is not a JSON object");
  try {
    LogRecord r;
    r.ts = j.at("ts").get<std::int64_t>();
    r.handle = j.at("handle").get<std::string>();
    r.jobId = j.at("jobId").get<std::string>();
    r.kind = parseLogKind(j.at("kind").get<std::string>());
    if (j.contains("data")) r.data = j.at("data").get<std::map<std::string, std::string>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::CorruptRecord, std::string("job log record: ") + e.what());
  }
}

JobLog::JobLog(fs::path path) : path_(std::move(path)) {
  fs::create_directories(path_.parent_path());
  // Seal a torn tail left by a crash so the next record starts on a fresh line.
  std::error_code ec;
  auto size = fs::file_size(path_, ec);
  if (!ec && size > 0) {
    std::ifstream in(path_, std::ios::binary);
    in.seekg(static_cast<std::streamoff>(size - 1));
    char last = 0;
    in.get(last);
    if (last != '\n') util::appendDurable(path_, "\n");
  }
  for (const auto& r : readAll()) lastTs_ = std::max(lastTs_, r.ts);
}

std::uint64_t JobLog::append(LogRecord& r) {
  std::lock_guard lock(mu_);
  r.ts = std::max(util::nowMs(), lastTs_);
  lastTs_ = r.ts;
  return util::appendDurable(path_, toLine(r) + "\n");
}

std::vector<LogRecord> JobLog::readAll() const {
  std::vector<LogRecord> out;
  std::ifstream in(path_, std::ios::binary);
  std::string line;
  while (std::getline(in, line)) {
    if (in.eof()) break;  // incomplete final line
    if (line.empty()) continue;
    try {
      out.push_back(recordFromLine(line));
    } catch (const Error& e) {
      spdlog::warn("job log: skipping corrupt record: {}", e.what());
    }
  }
  return out;
}

}  // namespace wms::executor
