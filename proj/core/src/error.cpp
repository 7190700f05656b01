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

#include "wms/error.hpp"

namespace wms {

std::string_view toString(Errc code) {
  switch (code) {
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::DuplicateAttribute: return "DuplicateAttribute";
    case Errc::StorageError: return "StorageError";
    case Errc::NotClaimed: return "NotClaimed";
    case Errc::UnknownJob: return "UnknownJob";
    case Errc::NoSuchState: return "NoSuchState";
    case Errc::BadQuery: return "BadQuery";
    case Errc::InvalidAd: return "InvalidAd";
    case Errc::NoMatchingResources: return "NoMatchingResources";
    case Errc::UnknownStrategy: return "UnknownStrategy";
    case Errc::Unsupported: return "Unsupported";
    case Errc::MissingSandboxFile: return "MissingSandboxFile";
    case Errc::UnknownHandle: return "UnknownHandle";
    case Errc::AlreadyTerminal: return "AlreadyTerminal";
    case Errc::InsufficientCredits: return "InsufficientCredits";
    case Errc::UnknownAccount: return "UnknownAccount";
    case Errc::InvalidAmount: return "InvalidAmount";
    case Errc::ChunkGap: return "ChunkGap";
    case Errc::UnknownFile: return "UnknownFile";
    case Errc::SubJobIncomplete: return "SubJobIncomplete";
    case Errc::BadRequest: return "BadRequest";
    case Errc::ValidationFailed: return "ValidationFailed";
    case Errc::Unauthorized: return "Unauthorized";
    case Errc::Timeout: return "Timeout";
    case Errc::TransportError: return "TransportError";
    case Errc::CorruptRecord: return "CorruptRecord";
  }
  return "Unknown";
}

std::optional<Errc> errcFromString(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(Errc::CorruptRecord); ++i) {
    if (toString(static_cast<Errc>(i)) == name) return static_cast<Errc>(i);
  }
  return std::nullopt;
}

}  // namespace wms
