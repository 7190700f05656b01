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

#include <iosfwd>
#include <string>
#include <vector>

namespace wms::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUser = 1;
inline constexpr int kExitTransport = 2;

/// The `wms` user interface. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, int inFd = 0);

/// The in-job checkpoint helper `wms-chkpt`: save k=v..., load, aggregate <jobId>...
int chkptMain(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wms::cli
