// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "dnf/field/radiance_field.hpp"

namespace dnf {

/// Checkpoint layout (all integers little-endian):
///
///   "DNF1"                      magic
///   u32 version                 currently 1
///   u32 n, n bytes              field config echo (key = value lines)
///   u32 n, n bytes              free-form run config echo
///   u32 section count
///   per section: u32 n, name bytes, u64 count, count x f32
///
/// Sections written: "grid", "mlp".
struct Checkpoint {
  RadianceField field;
  std::string run_config;
};

void write_checkpoint(std::ostream& out, const RadianceField& field,
                      const std::string& run_config = {});
void save_checkpoint(const std::filesystem::path& path, const RadianceField& field,
                     const std::string& run_config = {});

/// Throws FormatError on a bad magic, truncated data or section mismatch.
Checkpoint read_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dnf
