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

#ifndef POCKETRL_GEOMETRY_IO_HPP
#define POCKETRL_GEOMETRY_IO_HPP

#include <filesystem>
#include <iosfwd>
#include <string>

#include "pocketrl/geometry.hpp"

namespace pocketrl {

//! Shortest decimal text that parses back to the identical double.
std::string to_text(double value);
//! Parses text written by to_text (locale independent).
double parse_real(const std::string& text);

// Text cloud format:
//   line 1: atom count N
//   line 2: role=pocket | role=ligand
//   N lines: "<type> <x> <y> <z>"
// Ligand types are written as the argmax of the feature row.

void write_xyz(std::ostream& os, const PocketCloud& pocket);
void write_xyz(std::ostream& os, const LigandCloud& ligand);
PocketCloud read_pocket_xyz(std::istream& is);
//! Returns a clean ligand (scaled one-hot features).
LigandCloud read_ligand_xyz(std::istream& is);

void save_xyz(const std::filesystem::path& path, const PocketCloud& pocket);
void save_xyz(const std::filesystem::path& path, const LigandCloud& ligand);
PocketCloud load_pocket_xyz(const std::filesystem::path& path);
LigandCloud load_ligand_xyz(const std::filesystem::path& path);

//! Raw little-endian binary form of a ligand (coords and full features).
void write_binary(std::ostream& os, const LigandCloud& ligand);
LigandCloud read_binary_ligand(std::istream& is);

}  // namespace pocketrl

#endif  // POCKETRL_GEOMETRY_IO_HPP
