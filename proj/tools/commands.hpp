// SPDX-FileCopyrightText: Copyright (c) 2026 The pocketrl Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef POCKETRL_TOOLS_COMMANDS_HPP
#define POCKETRL_TOOLS_COMMANDS_HPP

namespace pocketrl::cli {

inline constexpr int kExitOk      = 0;
inline constexpr int kExitConfig  = 2;
inline constexpr int kExitRuntime = 3;

//! Parses arguments, dispatches to a subcommand and maps failures to exit codes.
int run(int argc, char** argv);

}  // namespace pocketrl::cli

#endif  // POCKETRL_TOOLS_COMMANDS_HPP
