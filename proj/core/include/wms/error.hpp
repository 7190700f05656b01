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

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace wms {

enum class Errc {
  SyntaxError,
  DuplicateAttribute,
  StorageError,
  NotClaimed,
  UnknownJob,
  NoSuchState,
  BadQuery,
  InvalidAd,
  NoMatchingResources,
  UnknownStrategy,
  Unsupported,
  MissingSandboxFile,
  UnknownHandle,
  AlreadyTerminal,
  InsufficientCredits,
  UnknownAccount,
  InvalidAmount,
  ChunkGap,
  UnknownFile,
  SubJobIncomplete,
  BadRequest,
  ValidationFailed,
  Unauthorized,
  Timeout,
  TransportError,
  CorruptRecord,
};

std::string_view toString(Errc code);
std::optional<Errc> errcFromString(std::string_view name);

/// Exception carrying a stable error code. The code name is what crosses
/// process boundaries (gateway responses, CLI diagnostics).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace wms
