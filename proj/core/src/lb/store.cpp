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

#include "wms/lb/store.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <set>

#include "wms/error.hpp"
#include "wms/util/fs.hpp"
#include "wms/util/time.hpp"

namespace wms::lb {

namespace {

std::optional<std::int64_t> toInt(const Payload& p, const std::string& key) {
  auto it = p.find(key);
  if (it == p.end()) return std::nullopt;
  try {
    return std::stoll(it->second);
  } catch (...) {
    return std::nullopt;
  }
}

StatePairs pairsFromJson(const std::string& text) {
  StatePairs out;
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (!j.is_array()) return out;
  for (const auto& p : j) {
    if (p.is_array() && p.size() == 2 && p[0].is_string() && p[1].is_string())
      out.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
  }
  return out;
}

std::string pairsToJson(const StatePairs& pairs) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& [k, v] : pairs) j.push_back({k, v});
  return j.dump();
}

bool knownField(const std::string& f) {
  return f == "owner" || f == "state" || f == "destination" || (f.rfind("tag:", 0) == 0 && f.size() > 4);
}

void validate(const Query& q) {
  if (q.empty()) throw Error(Errc::BadQuery, "query needs at least one predicate");
  for (const auto& p : q) {
    if (!knownField(p.field)) throw Error(Errc::BadQuery, "unknown query field '" + p.field + "'");
    if (p.values.empty()) throw Error(Errc::BadQuery, "predicate on '" + p.field + "' has no values");
    if (p.field == "state") {
      for (const auto& v : p.values)
        if (!parseJobState(v)) throw Error(Errc::BadQuery, "unknown state '" + v + "'");
    }
  }
}

}  // namespace

std::string shardOf(const std::string& jobId) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : jobId) {
    h ^= c;
    h *= 16777619u;
  }
  char buf[3];
  std::snprintf(buf, sizeof buf, "%02x", static_cast<unsigned>(h & 0xffu));
  return buf;
}

JobRecord buildRecord(const std::string& jobId, const std::vector<Event>& events) {
  JobRecord r;
  r.jobId = jobId;
  r.events = events;
  auto d = deriveState(events);
  r.state = d.state;
  r.attempt = d.attempt;

  std::tuple<int, int, std::int64_t> bestDest{-1, -1, 0};
  std::map<std::int64_t, StatePairs> states;
  for (const auto& e : events) {
    switch (e.kind) {
      case Kind::Registered:
        if (auto it = e.payload.find("owner"); it != e.payload.end()) r.owner = it->second;
        if (auto it = e.payload.find("jdl"); it != e.payload.end()) r.jdl = it->second;
        break;
      case Kind::Done:
        if (e.attempt() == d.attempt) {
          if (auto c = toInt(e.payload, "exitCode")) r.exitCode = static_cast<int>(*c);
        }
        break;
      case Kind::UserTag: {
        auto n = e.payload.find("name");
        auto v = e.payload.find("value");
        if (n != e.payload.end() && v != e.payload.end()) r.userTags[n->second] = v->second;
        break;
      }
      case Kind::Chkpt: {
        auto seq = toInt(e.payload, "seq");
        auto st = e.payload.find("state");
        if (seq && st != e.payload.end()) states.emplace(*seq, pairsFromJson(st->second));
        break;
      }
      default:
        break;
    }
    if (auto it = e.payload.find("destination"); it != e.payload.end() && !it->second.empty()) {
      std::tuple<int, int, std::int64_t> key{e.attempt(), e.kind == Kind::Matched ? 1 : 0, e.timestamp};
      if (key > bestDest) {
        bestDest = key;
        r.destination = it->second;
      }
    }
  }
  for (auto& [seq, pairs] : states) r.checkpointStates.push_back({seq, std::move(pairs)});
  return r;
}

Query parseQuery(std::string_view text) {
  Query q;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    std::string_view part = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    std::size_t eq = part.find('=');
    if (eq == std::string_view::npos || eq == 0)
      throw Error(Errc::BadQuery, "expected field=value in '" + std::string(part) + "'");
    Predicate p{std::string(part.substr(0, eq)), {}};
    std::string_view vals = part.substr(eq + 1);
    std::size_t vp = 0;
    while (vp <= vals.size()) {
      std::size_t bar = vals.find('|', vp);
      auto v = vals.substr(vp, bar == std::string_view::npos ? std::string_view::npos : bar - vp);
      if (!v.empty()) p.values.emplace_back(v);
      if (bar == std::string_view::npos) break;
      vp = bar + 1;
    }
    q.push_back(std::move(p));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  validate(q);
  return q;
}

bool matches(const JobRecord& r, const Query& q) {
  for (const auto& p : q) {
    bool any = false;
    for (const auto& v : p.values) {
      if (p.field == "owner") any = r.owner == v;
      else if (p.field == "state") any = parseJobState(v) == r.state;
      else if (p.field == "destination") any = r.destination && *r.destination == v;
      else {
        auto it = r.userTags.find(p.field.substr(4));
        any = it != r.userTags.end() && it->second == v;
      }
      if (any) break;
    }
    if (!any) return false;
  }
  return true;
}

Store::Store(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) throw Error(Errc::StorageError, "create lb store '" + root_.string() + "': " + ec.message());
}

fs::path Store::eventFile(const std::string& jobId) const {
  return root_ / shardOf(jobId) / (jobId + ".events");
}

std::vector<Event> Store::readEvents(const fs::path& file) const {
  std::string text;
  try {
    text = util::readFile(file);
  } catch (const Error&) {
    return {};
  }
  std::vector<Event> out;
  std::set<std::tuple<Source, std::int64_t>> seen;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) break;  // incomplete tail: a write in progress or torn by a crash
    if (auto e = fromLine(std::string_view(text).substr(pos, nl - pos))) {
      if (seen.insert({e->source, e->sourceSeq}).second) out.push_back(std::move(*e));
    }
    pos = nl + 1;
  }
  return out;
}

void Store::append(const fs::path& file, const Event& e) {
  struct stat st{};
  std::string line;
  if (::stat(file.c_str(), &st) == 0 && st.st_size > 0) {
    int fd = ::open(file.c_str(), O_RDONLY | O_CLOEXEC);
    char last = '\n';
    if (fd >= 0) {
      if (::pread(fd, &last, 1, st.st_size - 1) != 1) last = '\n';
      ::close(fd);
    }
    if (last != '\n') line += '\n';  // seal a torn fragment so it stays one bad line
  }
  line += toLine(e);
  line += '\n';
  util::appendDurable(file, line);
}

bool Store::logEvent(Event e) {
  if (e.jobId.empty() || e.jobId.find('/') != std::string::npos || e.jobId[0] == '.')
    throw Error(Errc::BadRequest, "invalid job id '" + e.jobId + "'");
  if (e.timestamp == 0) e.timestamp = util::nowMs();
  fs::path file = eventFile(e.jobId);
  if (e.kind == Kind::Registered) {
    std::error_code ec;
    fs::create_directories(file.parent_path(), ec);
  } else if (!fs::exists(file)) {
    throw Error(Errc::UnknownJob, "unknown job '" + e.jobId + "'");
  }
  util::FileLock lock(file, true);
  auto events = readEvents(file);
  for (const auto& old : events)
    if (old.source == e.source && old.sourceSeq == e.sourceSeq) return false;
  bool registered = std::any_of(events.begin(), events.end(), [](const Event& x) { return x.kind == Kind::Registered; });
  if (!registered && e.kind != Kind::Registered) throw Error(Errc::UnknownJob, "unknown job '" + e.jobId + "'");
  append(file, e);
  if (e.kind == Kind::Registered && !registered) util::fsyncDir(file.parent_path());
  return true;
}

bool Store::exists(const std::string& jobId) const { return find(jobId).has_value(); }

std::optional<JobRecord> Store::find(const std::string& jobId) const {
  if (jobId.empty() || jobId.find('/') != std::string::npos) return std::nullopt;
  fs::path file = eventFile(jobId);
  struct stat st{};
  if (::stat(file.c_str(), &st) != 0) return std::nullopt;
  auto size = static_cast<std::uintmax_t>(st.st_size);
  {
    std::lock_guard lock(mu_);
    auto it = cache_.find(jobId);
    if (it != cache_.end() && it->second.size == size) return it->second.record;
  }
  auto events = readEvents(file);
  if (std::none_of(events.begin(), events.end(), [](const Event& x) { return x.kind == Kind::Registered; }))
    return std::nullopt;
  JobRecord r = buildRecord(jobId, events);
  std::lock_guard lock(mu_);
  cache_[jobId] = Cached{size, r};
  return r;
}

JobRecord Store::record(const std::string& jobId) const {
  auto r = find(jobId);
  if (!r) throw Error(Errc::UnknownJob, "unknown job '" + jobId + "'");
  return std::move(*r);
}

std::vector<std::string> Store::jobIds() const {
  std::vector<std::string> out;
  std::error_code ec;
  for (const auto& shard : fs::directory_iterator(root_, ec)) {
    if (!shard.is_directory()) continue;
    std::error_code ec2;
    for (const auto& f : fs::directory_iterator(shard.path(), ec2)) {
      if (f.path().extension() == ".events") out.push_back(f.path().stem().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> Store::query(const Query& q) const {
  validate(q);
  std::vector<std::string> out;
  for (const auto& id : jobIds()) {
    auto r = find(id);
    if (r && matches(*r, q)) out.push_back(id);
  }
  return out;
}

std::int64_t Store::saveState(const std::string& jobId, const StatePairs& pairs) {
  fs::path file = eventFile(jobId);
  if (jobId.empty() || jobId.find('/') != std::string::npos || !fs::exists(file))
    throw Error(Errc::UnknownJob, "unknown job '" + jobId + "'");
  util::FileLock lock(file);
  auto events = readEvents(file);
  if (events.empty()) throw Error(Errc::UnknownJob, "unknown job '" + jobId + "'");
  JobRecord r = buildRecord(jobId, events);
  if (r.state == JobState::CLEARED) throw Error(Errc::UnknownJob, "job '" + jobId + "' has been cleared");
  std::int64_t seq = r.checkpointStates.empty() ? 1 : r.checkpointStates.back().seq + 1;
  Event e;
  e.jobId = jobId;
  e.source = Source::JobWrapper;
  e.sourceSeq = seq;
  e.timestamp = util::nowMs();
  e.kind = Kind::Chkpt;
  e.payload = {{"seq", std::to_string(seq)}, {"state", pairsToJson(pairs)}, {"attempt", std::to_string(r.attempt)}};
  append(file, e);
  return seq;
}

StatePairs Store::getState(const std::string& jobId, std::optional<std::int64_t> seq) const {
  JobRecord r = record(jobId);
  if (r.checkpointStates.empty()) throw Error(Errc::NoSuchState, "job '" + jobId + "' has no saved state");
  if (!seq) return r.checkpointStates.back().pairs;
  for (const auto& s : r.checkpointStates)
    if (s.seq == *seq) return s.pairs;
  throw Error(Errc::NoSuchState, "job '" + jobId + "' has no state with seq " + std::to_string(*seq));
}

void Store::rebuildIndex() {
  std::lock_guard lock(mu_);
  cache_.clear();
}

}  // namespace wms::lb
