#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "zsc/nn.hpp"

namespace zsc {

// Single-file model archive. Layout, all integers little-endian:
//   magic "ZSCKPT1\n"
//   u32 format version (currently 1)
//   u32 config length, config bytes (text, "key = value" lines)
//   u32 array count
//   per array: u16 name length, name bytes, u8 dtype tag (0 = float64),
//              u8 ndim, u32 dims[ndim], raw array data
// Weight bytes are written verbatim, so save/load round-trips bit-exactly.

void save_checkpoint(const std::filesystem::path& path, const std::string& config_text,
                     const ParamRegistry& params);

// Reads the archive into an already-constructed registry; array names and
// shapes must match exactly. Returns the config text parsed into a map.
std::map<std::string, std::string> load_checkpoint(const std::filesystem::path& path,
                                                   ParamRegistry& params);

// Reads only the config block.
std::map<std::string, std::string> peek_checkpoint_config(const std::filesystem::path& path);

std::string serialize_kv(const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> parse_kv(const std::string& text);

}  // namespace zsc
