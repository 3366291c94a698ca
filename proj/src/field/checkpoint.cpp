// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#include "dnf/field/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <span>
#include <vector>

#include "dnf/io/binary.hpp"

namespace dnf {

namespace {

constexpr std::array<char, 4> kMagic{'D', 'N', 'F', '1'};
constexpr std::uint32_t kVersion = 1;

void write_string(std::ostream& out, const std::string& s) {
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in, std::size_t limit) {
  const auto n = read_le<std::uint32_t>(in);
  if (n > limit) throw FormatError("checkpoint: string field too long");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw FormatError("checkpoint: truncated string");
  return s;
}

void write_section(std::ostream& out, const std::string& name, std::span<const double> values) {
  write_string(out, name);
  write_le<std::uint64_t>(out, values.size());
  for (double v : values) write_le<float>(out, static_cast<float>(v));
}

}  // namespace

void write_checkpoint(std::ostream& out, const RadianceField& field,
                      const std::string& run_config) {
  out.write(kMagic.data(), kMagic.size());
  write_le<std::uint32_t>(out, kVersion);
  write_string(out, field.config().to_text());
  write_string(out, run_config);
  write_le<std::uint32_t>(out, 2);
  write_section(out, "grid", field.grid_params());
  write_section(out, "mlp", field.mlp_params());
  if (!out) throw Error("checkpoint: write failed");
}

void save_checkpoint(const std::filesystem::path& path, const RadianceField& field,
                     const std::string& run_config) {
  // Write to a sibling temp file first so a crash never leaves a torn file.
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("checkpoint: cannot open '" + tmp.string() + "' for writing");
    write_checkpoint(out, field, run_config);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw FormatError("checkpoint: magic mismatch (expected DNF1)");
  const auto version = read_le<std::uint32_t>(in);
  if (version != kVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  const std::string field_text = read_string(in, 1 << 20);
  std::string run_config = read_string(in, 1 << 24);
  FieldConfig config = parse_field_config(field_text);
  try {
    config.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint: invalid field config: ") + e.what());
  }
  RadianceField field(config);

  std::map<std::string, std::span<double>> targets{{"grid", field.grid_params()},
                                                   {"mlp", field.mlp_params()}};
  const auto sections = read_le<std::uint32_t>(in);
  std::size_t seen = 0;
  for (std::uint32_t s = 0; s < sections; ++s) {
    const std::string name = read_string(in, 256);
    const auto count = read_le<std::uint64_t>(in);
    auto it = targets.find(name);
    if (it == targets.end()) throw FormatError("checkpoint: unknown section '" + name + "'");
    if (count != it->second.size()) {
      throw FormatError("checkpoint: section '" + name + "' has " + std::to_string(count) +
                        " values, config implies " + std::to_string(it->second.size()));
    }
    for (double& v : it->second) v = static_cast<double>(read_le<float>(in));
    ++seen;
  }
  if (seen != targets.size()) throw FormatError("checkpoint: missing parameter sections");
  return Checkpoint{std::move(field), std::move(run_config)};
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("checkpoint: cannot open '" + path.string() + "'");
  return read_checkpoint(in);
}

}  // namespace dnf
