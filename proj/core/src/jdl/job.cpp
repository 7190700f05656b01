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

#include "wms/jdl/job.hpp"

#include <array>

#include "wms/classad/eval.hpp"
#include "wms/error.hpp"
#include "wms/util/fs.hpp"

namespace wms::jdl {

using classad::ClassAd;
using classad::MatchContext;
using classad::Value;

std::string_view toString(JobType t) {
  switch (t) {
    case JobType::Normal: return "Normal";
    case JobType::Interactive: return "Interactive";
    case JobType::Checkpointable: return "Checkpointable";
    case JobType::Partitionable: return "Partitionable";
  }
  return "Normal";
}

bool isSafeSandboxPath(std::string_view path) {
  if (path.empty() || path.front() == '/') return false;
  std::size_t pos = 0;
  while (pos <= path.size()) {
    auto slash = path.find('/', pos);
    auto seg = path.substr(pos, slash == std::string_view::npos ? std::string_view::npos : slash - pos);
    if (seg == "..") return false;
    if (slash == std::string_view::npos) break;
    pos = slash + 1;
  }
  return true;
}

std::string describe(const std::vector<Violation>& violations) {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += v.attribute.empty() ? v.message : v.attribute + ": " + v.message;
  }
  return out;
}

namespace {

constexpr std::array kKnownAttributes = {
    "Type",        "JobType",     "Executable", "Arguments", "StdInput",     "StdOutput",
    "StdError",    "InputSandbox", "OutputSandbox", "Requirements", "Rank", "UserTags",
    "RetryCount",  "JobSteps",    "SubJobs",    "ListenerHost", "ListenerPort", "SubmitTo",
    "ChosenSE",    "StepFirst",   "StepLast",   "VirtualOrganisation"};

class JobChecker {
 public:
  explicit JobChecker(const ClassAd& ad) : ad_(ad), ctx_(ad_) {}

  Validated<JobDescription> run() {
    JobDescription job;
    checkUnknown();

    if (auto v = value("Executable")) {
      if (!v->isString() || v->asString().empty())
        violate("type", "Executable", "must be a non-empty string");
      else
        job.executable = v->asString();
    } else {
      violate("missing", "Executable", "attribute is mandatory");
    }
    job.arguments = optionalString("Arguments").value_or("");
    job.stdInput = optionalString("StdInput");
    job.stdOutput = optionalString("StdOutput");
    job.stdError = optionalString("StdError");
    job.inputSandbox = sandbox("InputSandbox");
    job.outputSandbox = sandbox("OutputSandbox");
    job.submitTo = optionalString("SubmitTo");
    job.chosenSE = optionalString("ChosenSE");

    if (auto t = optionalString("JobType")) {
      if (util::iequals(*t, "normal")) job.jobType = JobType::Normal;
      else if (util::iequals(*t, "interactive")) job.jobType = JobType::Interactive;
      else if (util::iequals(*t, "checkpointable")) job.jobType = JobType::Checkpointable;
      else if (util::iequals(*t, "partitionable")) job.jobType = JobType::Partitionable;
      else if (util::iequals(*t, "mpich")) violate("unsupported", "JobType", "MPICH jobs are unsupported");
      else violate("type", "JobType", "unknown job type '" + *t + "'");
    }

    if (auto r = optionalInteger("RetryCount", 0)) job.retryCount = static_cast<int>(*r);
    if (auto s = optionalInteger("JobSteps", 1)) job.jobSteps = static_cast<int>(*s);
    if (auto s = optionalInteger("SubJobs", 1)) job.subJobs = static_cast<int>(*s);

    if (job.jobType == JobType::Checkpointable || job.jobType == JobType::Partitionable) {
      if (!job.jobSteps && !ad_.contains("JobSteps"))
        violate("missing", "JobSteps", "required for " + std::string(toString(job.jobType)) + " jobs");
    }
    if (job.jobType == JobType::Partitionable) {
      if (!job.subJobs && !ad_.contains("SubJobs")) violate("missing", "SubJobs", "required for Partitionable jobs");
      if (job.subJobs && job.jobSteps && *job.subJobs > *job.jobSteps)
        violate("constraint", "SubJobs", "subJobs ≤ jobSteps");
    }

    auto first = optionalInteger("StepFirst", 0);
    auto last = optionalInteger("StepLast", 0);
    if (first && last) {
      if (*last < *first) violate("range", "StepLast", "must be ≥ StepFirst");
      else job.stepRange = std::make_pair(*first, *last);
    } else if (first || last) {
      violate("missing", first ? "StepLast" : "StepFirst", "StepFirst and StepLast go together");
    }

    auto host = optionalString("ListenerHost");
    auto port = optionalInteger("ListenerPort", 1);
    if (port && *port > 65535) violate("range", "ListenerPort", "must be ≤ 65535");
    else if (port) job.listener = Listener{host.value_or("127.0.0.1"), static_cast<int>(*port)};
    if ((host || port) && job.jobType != JobType::Interactive)
      warn("ignored", "ListenerPort", "listener only applies to Interactive jobs");

    job.userTags = userTags();

    ClassAd normalized = ad_;
    job.requirements = expression(normalized, "Requirements", kDefaultRequirements);
    job.rank = expression(normalized, "Rank", kDefaultRank);
    if (!normalized.contains("RetryCount")) normalized.set("RetryCount", Value(0));
    if (!normalized.contains("JobType")) normalized.set("JobType", Value("Normal"));

    Validated<JobDescription> out;
    out.violations = std::move(violations_);
    out.warnings = std::move(warnings_);
    if (out.violations.empty()) {
      job.ad = std::move(normalized);
      out.value = std::move(job);
    }
    return out;
  }

 private:
  void violate(std::string code, std::string attr, std::string msg) {
    violations_.push_back({std::move(code), std::move(attr), std::move(msg)});
  }
  void warn(std::string code, std::string attr, std::string msg) {
    warnings_.push_back({std::move(code), std::move(attr), std::move(msg)});
  }

  void checkUnknown() {
    for (const auto& e : ad_.entries()) {
      bool known = false;
      for (const char* k : kKnownAttributes) known = known || util::iequals(e.name, k);
      if (!known) warn("unknown-attribute", e.name, "not a recognized JDL attribute; preserved");
    }
  }

  std::optional<Value> value(std::string_view name) {
    if (!ad_.contains(name)) return std::nullopt;
    return classad::evaluateAttr(name, ctx_);
  }

  std::optional<std::string> optionalString(std::string_view name) {
    auto v = value(name);
    if (!v) return std::nullopt;
    if (!v->isString()) {
      violate("type", std::string(name), "must be a string");
      return std::nullopt;
    }
    return v->asString();
  }

  std::optional<std::int64_t> optionalInteger(std::string_view name, std::int64_t min) {
    auto v = value(name);
    if (!v) return std::nullopt;
    if (!v->isInteger()) {
      violate("type", std::string(name), "must be an integer");
      return std::nullopt;
    }
    if (v->asInteger() < min) {
      violate("range", std::string(name), "must be ≥ " + std::to_string(min));
      return std::nullopt;
    }
    return v->asInteger();
  }

  std::vector<std::string> sandbox(std::string_view name) {
    std::vector<std::string> out;
    auto v = value(name);
    if (!v) return out;
    if (!v->isList()) {
      violate("type", std::string(name), "must be a list of relative paths");
      return out;
    }
    for (const auto& item : v->asList()) {
      if (!item.isString()) {
        violate("type", std::string(name), "entries must be strings");
        continue;
      }
      if (!isSafeSandboxPath(item.asString())) {
        violate("path", std::string(name), "path escapes sandbox: '" + item.asString() + "'");
        continue;
      }
      out.push_back(item.asString());
    }
    return out;
  }

  std::map<std::string, std::string> userTags() {
    std::map<std::string, std::string> tags;
    const classad::Expr* e = ad_.lookup("UserTags");
    if (!e) return tags;
    const auto* nested = std::get_if<classad::AdExpr>(&(*e)->node);
    if (!nested) {
      violate("type", "UserTags", "must be a nested ad of name = value pairs");
      return tags;
    }
    MatchContext tagCtx(*nested->ad);
    for (const auto& entry : nested->ad->entries()) {
      Value v = classad::evaluate(entry.expr, tagCtx);
      if (v.isString()) tags[entry.name] = v.asString();
      else if (v.isInteger() || v.isReal() || v.isBool()) tags[entry.name] = classad::toString(v);
      else violate("type", "UserTags." + entry.name, "tag value must be a scalar");
    }
    return tags;
  }

  classad::Expr expression(ClassAd& normalized, std::string_view name, std::string_view fallback) {
    if (const classad::Expr* e = ad_.lookup(name)) return *e;
    classad::Expr def = classad::parseExpr(fallback);
    normalized.set(std::string(name), def);
    return def;
  }

  const ClassAd& ad_;
  MatchContext ctx_;
  std::vector<Violation> violations_;
  std::vector<Violation> warnings_;
};

}  // namespace

Validated<JobDescription> validateJob(const ClassAd& ad) { return JobChecker(ad).run(); }

Validated<JobDescription> validateJobText(std::string_view text) {
  try {
    return validateJob(classad::parseAd(text));
  } catch (const Error& e) {
    Validated<JobDescription> out;
    out.violations.push_back({e.code() == Errc::DuplicateAttribute ? "duplicate" : "syntax", "", e.what()});
    return out;
  }
}

}  // namespace wms::jdl
