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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wms/classad/classad.hpp"

namespace wms::jdl {

enum class JobType { Normal, Interactive, Checkpointable, Partitionable };

std::string_view toString(JobType t);

struct Listener {
  std::string host;
  int port = 0;
};

/// Structured violation record; `code` is a short machine-readable tag.
struct Violation {
  std::string code;
  std::string attribute;
  std::string message;
};

template <class T>
struct Validated {
  std::optional<T> value;
  std::vector<Violation> violations;
  std::vector<Violation> warnings;

  bool ok() const { return value.has_value(); }
};

struct JobDescription {
  classad::ClassAd ad;  // normalized: defaults applied
  JobType jobType = JobType::Normal;
  std::string executable;
  std::string arguments;
  std::optional<std::string> stdInput;
  std::optional<std::string> stdOutput;
  std::optional<std::string> stdError;
  std::vector<std::string> inputSandbox;
  std::vector<std::string> outputSandbox;
  classad::Expr requirements;
  classad::Expr rank;
  std::map<std::string, std::string> userTags;
  int retryCount = 0;
  std::optional<int> jobSteps;
  std::optional<int> subJobs;
  std::optional<Listener> listener;
  std::optional<std::string> submitTo;
  std::optional<std::string> chosenSE;
  /// Inclusive step range for partition sub-jobs (StepFirst/StepLast).
  std::optional<std::pair<std::int64_t, std::int64_t>> stepRange;

  std::string text() const { return classad::unparse(ad); }
};

inline constexpr std::string_view kDefaultRequirements = R"(other.Status == "Production")";
inline constexpr std::string_view kDefaultRank = "other.FreeCPUs";

/// Checks a job ad and applies defaults. Reports every violation, not only the first.
Validated<JobDescription> validateJob(const classad::ClassAd& ad);
/// Parses then validates; a parse failure becomes a single "syntax" violation.
Validated<JobDescription> validateJobText(std::string_view text);

/// Relative, non-empty, no `..` segment.
bool isSafeSandboxPath(std::string_view path);

std::string describe(const std::vector<Violation>& violations);

}  // namespace wms::jdl
