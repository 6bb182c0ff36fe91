// Copyright 2026 The genksr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace genksr {

/// Single-qubit measurement basis of a Pauli-6 shot. Index order X=0, Y=1, Z=2.
enum class Basis : std::uint8_t { X = 0, Y = 1, Z = 2 };

char basis_char(Basis b);
Basis basis_from_char(char c);

/// One randomized-measurement shot: per qubit, the basis and the outcome bit
/// (0 for the +1 eigenvalue).
struct ShotRecord {
  std::vector<Basis> bases;
  std::vector<std::uint8_t> bits;

  std::size_t width() const { return bits.size(); }
  std::string bases_string() const;
  std::string bits_string() const;
  bool operator==(const ShotRecord&) const = default;
};

}  // namespace genksr
