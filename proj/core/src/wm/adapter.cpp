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

#include "wms/wm/adapter.hpp"

#include "wms/error.hpp"
#include "wms/util/fs.hpp"

namespace wms::wm {

namespace {

template <class T>
void putOpt(nlohmann::json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

template <class T>
std::optional<T> getOpt(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<T>();
}

}  // namespace

nlohmann::json toJson(const SubmissionDescriptor& d) {
  nlohmann::json j{{"jobId", d.jobId},
                   {"attempt", d.attempt},
                   {"owner", d.owner},
                   {"finalJdl", d.finalJdl},
                   {"ceId", d.ceId},
                   {"jobType", d.jobType},
                   {"executable", d.executable},
                   {"arguments", d.arguments},
                   {"inputSandbox", d.inputSandbox},
                   {"outputSandbox", d.outputSandbox},
                   {"sandboxDir", d.sandboxDir},
                   {"outputDir", d.outputDir},
                   {"env", d.env}};
  putOpt(j, "seId", d.seId);
  putOpt(j, "stdInput", d.stdInput);
  putOpt(j, "stdOutput", d.stdOutput);
  putOpt(j, "stdError", d.stdError);
  if (d.listener) j["listener"] = {{"host", d.listener->host}, {"port", d.listener->port}};
  return j;
}

SubmissionDescriptor descriptorFromJson(const nlohmann::json& j) {
  try {
    SubmissionDescriptor d;
    d.jobId = j.at("jobId").get<std::string>();
    d.attempt = j.at("attempt").get<int>();
    d.owner = j.value("owner", std::string());
    d.finalJdl = j.at("finalJdl").get<std::string>();
    d.ceId = j.at("ceId").get<std::string>();
    d.seId = getOpt<std::string>(j, "seId");
    d.jobType = j.value("jobType", std::string("Normal"));
    d.executable = j.at("executable").get<std::string>();
    d.arguments = j.value("arguments", std::string());
    d.stdInput = getOpt<std::string>(j, "stdInput");
    d.stdOutput = getOpt<std::string>(j, "stdOutput");
    d.stdError = getOpt<std::string>(j, "stdError");
    d.inputSandbox = j.value("inputSandbox", std::vector<std::string>{});
    d.outputSandbox = j.value("outputSandbox", std::vector<std::string>{});
    d.sandboxDir = j.at("sandboxDir").get<std::string>();
    d.outputDir = j.at("outputDir").get<std::string>();
    d.env = j.value("env", std::map<std::string, std::string>{});
    if (j.contains("listener"))
      d.listener = jdl::Listener{j["listener"].at("host").get<std::string>(), j["listener"].at("port").get<int>()};
    if (d.jobId.empty() || d.ceId.empty() || d.executable.empty() || d.attempt < 1)
      throw Error(Errc::BadRequest, "descriptor lacks jobId, ceId, executable or attempt");
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BadRequest, std::string("malformed descriptor: ") + e.what());
  }
}

SubmissionDescriptor adaptJob(std::string_view resolvedJdl, const AdaptContext& ctx) {
  auto v = jdl::validateJobText(resolvedJdl);
  if (!v.ok()) throw Error(Errc::ValidationFailed, jdl::describe(v.violations));
  const jdl::JobDescription& job = *v.value;
  if (!job.submitTo) throw Error(Errc::ValidationFailed, "JDL has not been resolved (no SubmitTo)");

  Spool spool(ctx.spoolRoot);
  SubmissionDescriptor d;
  d.jobId = ctx.jobId;
  d.attempt = ctx.attempt;
  d.owner = ctx.owner;
  d.finalJdl = std::string(resolvedJdl);
  d.ceId = *job.submitTo;
  d.seId = job.chosenSE;
  d.jobType = std::string(jdl::toString(job.jobType));
  d.executable = job.executable;
  d.arguments = job.arguments;
  d.stdInput = job.stdInput;
  d.stdOutput = job.stdOutput;
  d.stdError = job.stdError;
  d.inputSandbox = job.inputSandbox;
  d.outputSandbox = job.outputSandbox;
  d.sandboxDir = spool.input(ctx.sandboxFrom.empty() ? ctx.jobId : ctx.sandboxFrom).string();
  d.outputDir = spool.output(ctx.jobId).string();

  std::vector<std::string> missing;
  for (const auto& name : d.inputSandbox)
    if (!fs::is_regular_file(fs::path(d.sandboxDir) / name)) missing.push_back(name);
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw Error(Errc::MissingSandboxFile, "input sandbox file(s) not staged: " + list);
  }

  d.env["WMS_JOB_ID"] = ctx.jobId;
  d.env["WMS_ATTEMPT"] = std::to_string(ctx.attempt);
  d.env["WMS_CE"] = d.ceId;
  if (d.seId) d.env["WMS_SE"] = *d.seId;
  if (ctx.checkpointIn) d.env["WMS_CHECKPOINT_IN"] = *ctx.checkpointIn;
  if (job.stepRange) {
    d.env["WMS_STEP_FIRST"] = std::to_string(job.stepRange->first);
    d.env["WMS_STEP_LAST"] = std::to_string(job.stepRange->second);
  } else if (job.jobSteps) {
    d.env["WMS_STEP_FIRST"] = "0";
    d.env["WMS_STEP_LAST"] = std::to_string(*job.jobSteps - 1);
  }
  if (job.jobType == jdl::JobType::Interactive && job.listener) {
    d.listener = job.listener;
    d.env["WMS_LISTENER_HOST"] = job.listener->host;
    d.env["WMS_LISTENER_PORT"] = std::to_string(job.listener->port);
  }
  return d;
}

fs::path writeCheckpointFile(const Spool& spool, const std::string& jobId, int attempt, const lb::StatePairs& pairs) {
  std::string text;
  for (const auto& [k, v] : pairs) text += k + "=" + v + "\n";
  fs::path dir = spool.checkpoint(jobId);
  fs::create_directories(dir);
  fs::path file = dir / (std::to_string(attempt) + ".state");
  util::writeFileAtomic(file, text);
  return file;
}

lb::StatePairs readCheckpointFile(const fs::path& file) {
  lb::StatePairs out;
  std::string text = util::readFile(file);
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    std::size_t eq = line.find('=');
    if (eq != std::string::npos && eq > 0) out.emplace_back(line.substr(0, eq), line.substr(eq + 1));
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  return out;
}

std::string BrokerHelper::resolve(std::string_view jdlText) {
  auto r = broker::helperResolve(jdlText, snapshot_, options_);
  if (!r.ok) {
    throw Error(errcFromString(r.failureCode).value_or(Errc::ValidationFailed), r.failureMessage);
  }
  last_ = r.result;
  return r.jdl;
}

std::string AdapterHelper::resolve(std::string_view resolvedJdl) {
  return toJson(adaptJob(resolvedJdl, ctx_)).dump();
}

SubmissionDescriptor runHelperChain(std::string_view jdlText, BrokerHelper& broker, AdapterHelper& adapter) {
  std::string resolved = broker.resolve(jdlText);
  auto check = jdl::validateJobText(resolved);
  if (!check.ok() || !check.value->submitTo)
    throw Error(Errc::ValidationFailed, "broker output does not re-validate: " + jdl::describe(check.violations));
  std::string descriptorText = adapter.resolve(resolved);
  auto j = nlohmann::json::parse(descriptorText, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::ValidationFailed, "adapter produced malformed descriptor");
  SubmissionDescriptor d = descriptorFromJson(j);
  if (!jdl::validateJobText(d.finalJdl).ok()) throw Error(Errc::ValidationFailed, "descriptor JDL does not re-validate");
  return d;
}

}  // namespace wms::wm
