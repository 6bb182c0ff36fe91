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
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "genksr/genmodel.hpp"
#include "genksr/pauli.hpp"
#include "genksr/records.hpp"

namespace genksr {

enum class RecordMode : std::uint8_t { kComputational, kPauli6 };
std::string mode_name(RecordMode m);
RecordMode parse_record_mode(std::string_view name);

/// First line of a shot file.
struct DatasetHeader {
  std::size_t n_qubits = 0;
  RecordMode mode = RecordMode::kComputational;
  std::uint64_t master_seed = 0;
  /// "device_sim" or "model".
  std::string source = "device_sim";
  /// n for computational records, n + 1 (ancilla last) for Hadamard-test ones.
  std::size_t width = 0;

  TokenScheme token_scheme() const;
  nlohmann::ordered_json to_json() const;
  static DatasetHeader from_json(const nlohmann::json& doc);
};

/// One shot. `bases` is empty in computational mode.
struct DatasetRecord {
  std::size_t ham_id = 0;
  int t_index = 0;
  std::string bases;
  std::string bits;

  bool operator==(const DatasetRecord&) const = default;
};

struct ShotDataset {
  DatasetHeader header;
  std::vector<DatasetRecord> records;

  /// Pauli-6 records grouped by (ham_id, t_index).
  std::map<std::size_t, std::map<int, std::vector<ShotRecord>>> pauli_records() const;
  /// Computational bitstrings grouped by (ham_id, t_index).
  std::map<std::size_t, std::map<int, std::vector<Bitstring>>> bitstrings() const;
};

DatasetRecord make_record(std::size_t ham_id, int t_index, const ShotRecord& shot);
DatasetRecord make_record(std::size_t ham_id, int t_index, Bitstring bits, std::size_t n_qubits);
DatasetRecord make_record(std::size_t ham_id, int t_index, const TokenSequence& tokens, RecordMode mode);
TokenSequence record_tokens(const DatasetRecord& r, RecordMode mode);

/// Checks every record against the header; throws ValidationError with the
/// offending line number.
void validate_dataset(const ShotDataset& data);

void write_dataset(std::ostream& out, const ShotDataset& data);
void write_dataset(const std::string& path, const ShotDataset& data);
ShotDataset read_dataset(std::istream& in);
ShotDataset read_dataset(const std::string& path);

}  // namespace genksr
