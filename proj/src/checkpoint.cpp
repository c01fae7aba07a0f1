// Copyright 2026 The hga Authors
// SPDX-License-Identifier: Apache-2.0

#include "hga/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>

namespace hga {

using json = nlohmann::json;

const Matrix& Checkpoint::tensor(const std::string& name) const {
  for (const auto& [n, m] : tensors)
    if (n == name) return m;
  throw std::out_of_range("checkpoint: no tensor named '" + name + "'");
}

namespace {

void put_le(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) {
    out.push_back(static_cast<char>(bits & 0xffU));
    bits >>= 8;
  }
}

double get_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int b = 7; b >= 0; --b) bits = (bits << 8) | p[b];
  return std::bit_cast<double>(bits);
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  json header = ckpt.header;
  header["tensors"] = json::array();
  std::size_t total = 0;
  for (const auto& [name, m] : ckpt.tensors) {
    header["tensors"].push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
    total += m.size();
  }
  std::string out = header.dump();
  out.push_back('\n');
  out.reserve(out.size() + 8 * total);
  for (const auto& [name, m] : ckpt.tensors)
    for (double v : m.values()) put_le(out, v);
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  const std::size_t nl = bytes.find('\n');
  if (nl == std::string::npos) throw std::runtime_error("checkpoint: missing header line");
  Checkpoint ckpt;
  try {
    ckpt.header = json::parse(bytes.substr(0, nl));
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("checkpoint: bad header: ") + e.what());
  }
  std::size_t offset = nl + 1;
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  for (const auto& t : ckpt.header.at("tensors")) {
    const auto rows = t.at("rows").get<std::size_t>();
    const auto cols = t.at("cols").get<std::size_t>();
    if (offset + 8 * rows * cols > bytes.size()) throw std::runtime_error("checkpoint: truncated");
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i, offset += 8) m.data()[i] = get_le(raw + offset);
    ckpt.tensors.emplace_back(t.at("name").get<std::string>(), std::move(m));
  }
  if (offset != bytes.size()) throw std::runtime_error("checkpoint: trailing bytes");
  return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  const std::string bytes = encode_checkpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace hga
