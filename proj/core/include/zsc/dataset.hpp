#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "zsc/image.hpp"

namespace zsc {

struct ImageRecord {
  std::string id;
  std::string split;       // train | val | test
  std::string class_name;  // target class of this image
  int gt_count = 0;
  std::string image_path;    // relative to the manifest directory
  std::string density_path;  // relative, target-class ground-truth density
  std::vector<Rect> boxes;   // ground-truth boxes of the target class
};

// Line-oriented dataset index. The three splits carry pairwise disjoint
// class sets; load_manifest enforces this.
struct DatasetManifest {
  int version = 1;
  uint64_t seed = 0;
  std::map<std::string, std::vector<std::string>> split_classes;
  std::vector<ImageRecord> records;

  std::vector<const ImageRecord*> split_records(const std::string& split) const;
  const std::vector<std::string>& classes_of(const std::string& split) const;
};

void save_manifest(const std::filesystem::path& path, const DatasetManifest& m);
DatasetManifest load_manifest(const std::filesystem::path& path);

// Density grid file: 16-byte header (8-byte magic "ZSCDEN1\0", u32 height,
// u32 width, little-endian) followed by row-major float32 values.
void save_density(const std::filesystem::path& path, const Grid& density);
Grid load_density(const std::filesystem::path& path);

}  // namespace zsc
