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

#include <string_view>

namespace wms::util {

// Named stage boundaries used by the crash-injection harness. When the
// environment variable WMS_CRASH_AT lists `name` (comma separated, optional
// `name@N` to fire on the Nth hit) the process SIGKILLs itself there.
void crashPoint(std::string_view name);

}  // namespace wms::util
