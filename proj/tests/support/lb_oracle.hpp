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

// Independent oracle for event-sourced job state and the exhaustive
// permutation check shared by unit and acceptance tests.

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

#include "wms/lb/event.hpp"

namespace wms::testgen {

// One alphabet letter: an event kind plus optional exit code / attempt tag.
struct Letter {
  lb::Kind kind;
  int exitCode = -1;  // Done only
  int attempt = 0;    // 0: untagged
};

inline lb::Event makeEvent(const Letter& l, int seq) {
  lb::Event e;
  e.jobId = "job";
  e.source = lb::Source::WM;
  e.sourceSeq = seq;
  e.timestamp = 1000 + seq;
  e.kind = l.kind;
  if (l.kind == lb::Kind::Done) e.payload["exitCode"] = std::to_string(l.exitCode);
  if (l.attempt > 0) e.payload["attempt"] = std::to_string(l.attempt);
  return e;
}

// Every kind, with Done split by exit code, untagged.
inline std::vector<Letter> untaggedAlphabet() {
  using K = lb::Kind;
  std::vector<Letter> a;
  for (K k : {K::Registered, K::Accepted, K::Refused, K::Matched, K::Staged, K::Committed, K::Running, K::Chkpt,
              K::Aborted, K::Cancelled, K::Resubmitted, K::Cleared, K::UserTag})
    a.push_back({k});
  a.push_back({K::Done, 0});
  a.push_back({K::Done, 1});
  return a;
}

// A smaller alphabet whose events carry attempt tags 1 and 2.
inline std::vector<Letter> taggedAlphabet() {
  using K = lb::Kind;
  return {{K::Registered}, {K::Accepted, -1, 1}, {K::Aborted, -1, 1}, {K::Resubmitted, -1, 2},
          {K::Matched, -1, 2}, {K::Running, -1, 2}, {K::Done, 0, 2}, {K::Done, 1, 1}, {K::Cleared, -1, 2}};
}

// Precedence-max written out from the rule table, independent of lb::deriveState.
inline lb::Derived oracleDerive(const std::vector<Letter>& letters) {
  using K = lb::Kind;
  auto rank = [](const Letter& l) -> int {
    switch (l.kind) {
      case K::Registered: return 0;
      case K::Accepted: return 1;
      case K::Matched: return 2;
      case K::Committed: return 3;
      case K::Running: return 4;
      case K::Done: return l.exitCode == 0 ? 5 : 6;
      case K::Refused:
      case K::Aborted: return 7;
      case K::Cancelled: return 8;
      case K::Cleared: return 9;
      default: return -1;
    }
  };
  static const lb::JobState byRank[] = {lb::JobState::SUBMITTED, lb::JobState::WAITING,     lb::JobState::READY,
                                        lb::JobState::SCHEDULED, lb::JobState::RUNNING,     lb::JobState::DONE_OK,
                                        lb::JobState::DONE_FAILED, lb::JobState::ABORTED,   lb::JobState::CANCELLED,
                                        lb::JobState::CLEARED};
  int resub = 0, attempt = 1;
  for (const auto& l : letters) {
    if (l.kind == K::Resubmitted) ++resub;
    attempt = std::max(attempt, l.attempt);
  }
  attempt = std::max(attempt, 1 + resub);
  int best = attempt > 1 ? 1 : 0;
  for (const auto& l : letters) {
    int a = l.attempt > 0 ? l.attempt : 1;
    if (a == attempt) best = std::max(best, rank(l));
  }
  return {byRank[best], attempt};
}

struct PermutationReport {
  long multisets = 0;
  long permutations = 0;
  long disagreements = 0;  // permutations whose result differs from the oracle
  std::string firstFailure;
};

// Enumerates every multiset of size 1..maxSize over `alphabet` and checks
// every distinct permutation against the oracle.
inline PermutationReport checkAllPermutations(const std::vector<Letter>& alphabet, int maxSize) {
  PermutationReport rep;
  const int n = static_cast<int>(alphabet.size());
  std::vector<int> pick;
  std::function<void(int, int)> rec = [&](int start, int left) {
    if (!pick.empty()) {
      {
        ++rep.multisets;
        std::vector<Letter> letters;
        for (int i : pick) letters.push_back(alphabet[i]);
        lb::Derived expected = oracleDerive(letters);
        std::vector<int> perm = pick;  // already sorted
        std::vector<lb::Event> events(perm.size());
        do {
          for (std::size_t i = 0; i < perm.size(); ++i) events[i] = makeEvent(alphabet[perm[i]], static_cast<int>(i) + 1);
          ++rep.permutations;
          lb::Derived got = lb::deriveState(events);
          if (!(got == expected)) {
            ++rep.disagreements;
            if (rep.firstFailure.empty()) {
              for (int i : perm) rep.firstFailure += std::string(lb::toString(alphabet[i].kind)) + " ";
              rep.firstFailure += "-> " + std::string(lb::toString(got.state)) + "/" + std::to_string(got.attempt) +
                                  " expected " + std::string(lb::toString(expected.state)) + "/" +
                                  std::to_string(expected.attempt);
            }
          }
        } while (std::next_permutation(perm.begin(), perm.end()));
      }
    }
    if (left == 0) return;
    for (int i = start; i < n; ++i) {
      pick.push_back(i);
      rec(i, left - 1);
      pick.pop_back();
    }
  };
  rec(0, maxSize);
  return rep;
}

}  // namespace wms::testgen
