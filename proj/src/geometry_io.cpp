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

#include "pocketrl/geometry_io.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace pocketrl {

std::string to_text(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_real(const std::string& text) {
  double value = 0.0;
  const char* begin = text.data();
  if (!text.empty() && text.front() == '+') {
    ++begin;
  }
  auto res = std::from_chars(begin, text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw std::runtime_error("cannot parse real number: '" + text + "'");
  }
  return value;
}

namespace {

void write_rows(std::ostream& os, const Coords<double>& coords, const std::vector<int>& types) {
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    os << types[i] << ' ' << to_text(coords(i, 0)) << ' ' << to_text(coords(i, 1)) << ' '
       << to_text(coords(i, 2)) << '\n';
  }
}

void read_rows(std::istream& is, const std::string& role, Coords<double>& coords, std::vector<int>& types) {
  std::string line;
  if (!std::getline(is, line)) {
    throw std::runtime_error("xyz: missing atom count");
  }
  int n = 0;
  try {
    n = std::stoi(line);
  } catch (const std::exception&) {
    throw std::runtime_error("xyz: bad atom count line '" + line + "'");
  }
  if (n < 1) {
    throw std::runtime_error("xyz: atom count must be positive");
  }
  if (!std::getline(is, line) || line != "role=" + role) {
    throw std::runtime_error("xyz: expected header 'role=" + role + "'");
  }
  coords.resize(n, 3);
  types.resize(n);
  for (int i = 0; i < n; ++i) {
    if (!std::getline(is, line)) {
      throw std::runtime_error("xyz: truncated atom list");
    }
    std::istringstream ls(line);
    std::string type, x, y, z;
    if (!(ls >> type >> x >> y >> z)) {
      throw std::runtime_error("xyz: malformed atom line '" + line + "'");
    }
    types[i]     = std::stoi(type);
    coords(i, 0) = parse_real(x);
    coords(i, 1) = parse_real(y);
    coords(i, 2) = parse_real(z);
  }
}

template <typename Cloud>
void save_text(const std::filesystem::path& path, const Cloud& cloud) {
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  write_xyz(os, cloud);
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw std::runtime_error("cannot open " + path.string());
  }
  return is;
}

}  // namespace

void write_xyz(std::ostream& os, const PocketCloud& pocket) {
  os << pocket.size() << "\nrole=pocket\n";
  write_rows(os, pocket.coords, pocket.types);
}

void write_xyz(std::ostream& os, const LigandCloud& ligand) {
  os << ligand.size() << "\nrole=ligand\n";
  write_rows(os, ligand.coords, ligand_types(ligand));
}

PocketCloud read_pocket_xyz(std::istream& is) {
  PocketCloud pocket;
  read_rows(is, "pocket", pocket.coords, pocket.types);
  pocket.validate();
  return pocket;
}

LigandCloud read_ligand_xyz(std::istream& is) {
  Coords<double> coords;
  std::vector<int> types;
  read_rows(is, "ligand", coords, types);
  return make_clean_ligand(coords, types);
}

void save_xyz(const std::filesystem::path& path, const PocketCloud& pocket) { save_text(path, pocket); }
void save_xyz(const std::filesystem::path& path, const LigandCloud& ligand) { save_text(path, ligand); }

PocketCloud load_pocket_xyz(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_pocket_xyz(is);
}

LigandCloud load_ligand_xyz(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_ligand_xyz(is);
}

void write_binary(std::ostream& os, const LigandCloud& ligand) {
  const std::int64_t n = ligand.size();
  const std::int64_t k = ligand.feature_dim();
  os.write(reinterpret_cast<const char*>(&n), sizeof n);
  os.write(reinterpret_cast<const char*>(&k), sizeof k);
  os.write(reinterpret_cast<const char*>(ligand.coords.data()), static_cast<std::streamsize>(sizeof(double) * n * 3));
  os.write(reinterpret_cast<const char*>(ligand.features.data()), static_cast<std::streamsize>(sizeof(double) * n * k));
}

LigandCloud read_binary_ligand(std::istream& is) {
  std::int64_t n = 0, k = 0;
  is.read(reinterpret_cast<char*>(&n), sizeof n);
  is.read(reinterpret_cast<char*>(&k), sizeof k);
  if (!is || n < 1 || k < 0 || n > (1 << 20) || k > 1024) {
    throw std::runtime_error("binary ligand: bad header");
  }
  LigandCloud out;
  out.coords.resize(n, 3);
  out.features.resize(n, k);
  is.read(reinterpret_cast<char*>(out.coords.data()), static_cast<std::streamsize>(sizeof(double) * n * 3));
  is.read(reinterpret_cast<char*>(out.features.data()), static_cast<std::streamsize>(sizeof(double) * n * k));
  if (!is) {
    throw std::runtime_error("binary ligand: truncated payload");
  }
  return out;
}

}  // namespace pocketrl
