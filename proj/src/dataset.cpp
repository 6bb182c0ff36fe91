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


#include "genksr/dataset.hpp"

#include <fstream>
#include <sstream>

#include "genksr/errors.hpp"

namespace genksr {

std::string mode_name(RecordMode m) { return m == RecordMode::kPauli6 ? "pauli6" : "computational"; }

RecordMode parse_record_mode(std::string_view name) {
  if (name == "pauli6") return RecordMode::kPauli6;
  if (name == "computational") return RecordMode::kComputational;
  throw ValidationError("unknown record mode '" + std::string(name) + "'");
}

TokenScheme DatasetHeader::token_scheme() const {
  return mode == RecordMode::kPauli6 ? TokenScheme::pauli6(width) : TokenScheme::computational(width);
}

nlohmann::ordered_json DatasetHeader::to_json() const {
  nlohmann::ordered_json j;
  j["n_qubits"] = n_qubits;
  j["token_scheme"] = mode_name(mode);
  j["master_seed"] = master_seed;
  j["source"] = source;
  j["width"] = width;
  return j;
}

DatasetHeader DatasetHeader::from_json(const nlohmann::json& doc) {
  DatasetHeader h;
  try {
    h.n_qubits = doc.at("n_qubits").get<std::size_t>();
    h.mode = parse_record_mode(doc.at("token_scheme").get<std::string>());
    h.master_seed = doc.at("master_seed").get<std::uint64_t>();
    h.source = doc.value("source", std::string("device_sim"));
    h.width = doc.value("width", h.n_qubits);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed dataset header: ") + e.what());
  }
  require(h.n_qubits >= 1 && h.n_qubits <= 63, "dataset n_qubits out of range");
  require(h.width == h.n_qubits || h.width == h.n_qubits + 1, "dataset width must be n_qubits or n_qubits + 1");
  return h;
}

DatasetRecord make_record(std::size_t ham_id, int t_index, const ShotRecord& shot) {
  return {ham_id, t_index, shot.bases_string(), shot.bits_string()};
}

DatasetRecord make_record(std::size_t ham_id, int t_index, Bitstring bits, std::size_t n_qubits) {
  std::string text(n_qubits, '0');
  for (std::size_t q = 0; q < n_qubits; ++q)
    if ((bits >> q) & 1U) text[q] = '1';
  return {ham_id, t_index, "", text};
}

DatasetRecord make_record(std::size_t ham_id, int t_index, const TokenSequence& tokens, RecordMode mode) {
  if (mode == RecordMode::kPauli6) return make_record(ham_id, t_index, decode_record(tokens));
  return make_record(ham_id, t_index, decode_bits(tokens), tokens.size());
}

namespace {

ShotRecord to_shot(const DatasetRecord& r) {
  ShotRecord s;
  for (char c : r.bases) s.bases.push_back(basis_from_char(c));
  for (char c : r.bits) s.bits.push_back(static_cast<std::uint8_t>(c - '0'));
  return s;
}

Bitstring to_bits(const DatasetRecord& r) {
  Bitstring out = 0;
  for (std::size_t q = 0; q < r.bits.size(); ++q)
    if (r.bits[q] == '1') out |= Bitstring{1} << q;
  return out;
}

void check_record(const DatasetHeader& h, const DatasetRecord& r) {
  require(r.bits.size() == h.width, "record width does not match the header");
  for (char c : r.bits) require(c == '0' || c == '1', "bits must be a 0/1 string");
  if (h.mode == RecordMode::kPauli6) {
    require(r.bases.size() == h.width, "Pauli-6 records need one basis per bit");
    for (char c : r.bases) require(c == 'X' || c == 'Y' || c == 'Z', "bases must be drawn from X, Y, Z");
  } else {
    require(r.bases.empty(), "computational records carry no bases");
  }
  require(r.t_index >= 0, "t_index must be >= 0");
}

}  // namespace

TokenSequence record_tokens(const DatasetRecord& r, RecordMode mode) {
  if (mode == RecordMode::kPauli6) return encode_record(to_shot(r));
  return encode_bits(to_bits(r), r.bits.size());
}

std::map<std::size_t, std::map<int, std::vector<ShotRecord>>> ShotDataset::pauli_records() const {
  require(header.mode == RecordMode::kPauli6, "dataset does not hold Pauli-6 records");
  std::map<std::size_t, std::map<int, std::vector<ShotRecord>>> out;
  for (const auto& r : records) out[r.ham_id][r.t_index].push_back(to_shot(r));
  return out;
}

std::map<std::size_t, std::map<int, std::vector<Bitstring>>> ShotDataset::bitstrings() const {
  require(header.mode == RecordMode::kComputational, "dataset does not hold computational records");
  std::map<std::size_t, std::map<int, std::vector<Bitstring>>> out;
  for (const auto& r : records) out[r.ham_id][r.t_index].push_back(to_bits(r));
  return out;
}

void validate_dataset(const ShotDataset& data) {
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    try {
      check_record(data.header, data.records[i]);
    } catch (const ValidationError& e) {
      throw ValidationError("record " + std::to_string(i + 1) + ": " + e.what());
    }
  }
}

void write_dataset(std::ostream& out, const ShotDataset& data) {
  validate_dataset(data);
  out << data.header.to_json().dump() << '\n';
  const std::string mode = mode_name(data.header.mode);
  for (const auto& r : data.records) {
    nlohmann::ordered_json j;
    j["ham_id"] = r.ham_id;
    j["t_index"] = r.t_index;
    j["mode"] = mode;
    if (data.header.mode == RecordMode::kPauli6) j["bases"] = r.bases;
    j["bits"] = r.bits;
    out << j.dump() << '\n';
  }
  if (!out) throw ValidationError("failed to write dataset");
}

void write_dataset(const std::string& path, const ShotDataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  write_dataset(out, data);
}

ShotDataset read_dataset(std::istream& in) {
  ShotDataset data;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("dataset is empty; expected a header line");
  try {
    data.header = DatasetHeader::from_json(nlohmann::json::parse(line));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("dataset header is not JSON: ") + e.what());
  }
  const std::string mode = mode_name(data.header.mode);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      DatasetRecord r;
      r.ham_id = j.at("ham_id").get<std::size_t>();
      r.t_index = j.at("t_index").get<int>();
      if (j.at("mode").get<std::string>() != mode) throw ValidationError("record mode differs from the header");
      if (data.header.mode == RecordMode::kPauli6) r.bases = j.at("bases").get<std::string>();
      else if (j.contains("bases")) throw ValidationError("computational records carry no bases");
      r.bits = j.at("bits").get<std::string>();
      check_record(data.header, r);
      data.records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return data;
}

ShotDataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open dataset '" + path + "'");
  return read_dataset(in);
}

}  // namespace genksr
