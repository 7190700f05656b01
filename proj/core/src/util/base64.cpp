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

#include "wms/util/base64.hpp"

#include <boost/beast/core/detail/base64.hpp>

#include "wms/error.hpp"

namespace wms::util {

namespace b64 = boost::beast::detail::base64;

std::string base64Encode(std::string_view bytes) {
  std::string out(b64::encoded_size(bytes.size()), '\0');
  out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
  return out;
}

std::string base64Decode(std::string_view text) {
  if (text.size() % 4 != 0) throw Error(Errc::BadRequest, "base64 length not a multiple of 4");
  std::string out(b64::decoded_size(text.size()), '\0');
  auto [written, read] = b64::decode(out.data(), text.data(), text.size());
  // Decoding stops at the first '='; only padding may follow.
  const auto rest = text.substr(read);
  if (rest.size() > 2 || rest.find_first_not_of('=') != std::string_view::npos)
    throw Error(Errc::BadRequest, "malformed base64 data");
  out.resize(written);
  return out;
}

}  // namespace wms::util
