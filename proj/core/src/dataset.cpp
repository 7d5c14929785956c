#include "zsc/dataset.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "zsc/error.hpp"

namespace zsc {

namespace {

constexpr char kDensityMagic[8] = {'Z', 'S', 'C', 'D', 'E', 'N', '1', '\0'};
constexpr char kManifestHeader[] = "zsc-manifest 1";

void check_disjoint(const DatasetManifest& m) {
  const std::vector<std::string> splits = {"train", "val", "test"};
  for (size_t i = 0; i < splits.size(); ++i) {
    for (size_t j = i + 1; j < splits.size(); ++j) {
      const auto a = m.split_classes.find(splits[i]);
      const auto b = m.split_classes.find(splits[j]);
      if (a == m.split_classes.end() || b == m.split_classes.end()) continue;
      std::set<std::string> sa(a->second.begin(), a->second.end());
      for (const std::string& c : b->second) {
        if (sa.count(c)) {
          throw IoError("manifest: class '" + c + "' appears in both " + splits[i] +
                        " and " + splits[j] + " splits");
        }
      }
    }
  }
}

}  // namespace

std::vector<const ImageRecord*> DatasetManifest::split_records(const std::string& split) const {
  std::vector<const ImageRecord*> out;
  for (const ImageRecord& r : records) {
    if (r.split == split) out.push_back(&r);
  }
  return out;
}

const std::vector<std::string>& DatasetManifest::classes_of(const std::string& split) const {
  const auto it = split_classes.find(split);
  if (it == split_classes.end()) {
    throw IoError("manifest: unknown split '" + split + "'");
  }
  return it->second;
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  std::ofstream os(path);
  if (!os) throw IoError("save_manifest: cannot open " + path.string());
  os << kManifestHeader << "\n";
  os << "seed " << m.seed << "\n";
  for (const auto& [split, classes] : m.split_classes) {
    os << "split " << split << " classes";
    for (const std::string& c : classes) os << " " << c;
    os << "\n";
  }
  for (const ImageRecord& r : m.records) {
    os << "image " << r.id << " " << r.split << " " << r.class_name << " " << r.gt_count
       << " " << r.image_path << " " << r.density_path << " " << r.boxes.size();
    for (const Rect& b : r.boxes) {
      os << " " << b.x0 << " " << b.y0 << " " << b.x1 << " " << b.y1;
    }
    os << "\n";
  }
  if (!os) throw IoError("save_manifest: write failed for " + path.string());
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw MissingArtifactError("load_manifest: cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != kManifestHeader) {
    throw IoError("load_manifest: bad header in " + path.string());
  }
  DatasetManifest m;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "seed") {
      ls >> m.seed;
    } else if (tag == "split") {
      std::string split, kw;
      ls >> split >> kw;
      if (kw != "classes") throw IoError("load_manifest: malformed split line");
      std::string c;
      while (ls >> c) m.split_classes[split].push_back(c);
    } else if (tag == "image") {
      ImageRecord r;
      size_t nboxes = 0;
      ls >> r.id >> r.split >> r.class_name >> r.gt_count >> r.image_path >>
          r.density_path >> nboxes;
      for (size_t i = 0; i < nboxes; ++i) {
        Rect b;
        ls >> b.x0 >> b.y0 >> b.x1 >> b.y1;
        r.boxes.push_back(b);
      }
      if (!ls) throw IoError("load_manifest: malformed image line: " + line);
      if (static_cast<int>(r.boxes.size()) != r.gt_count) {
        throw IoError("load_manifest: gt_count does not match box count for " + r.id);
      }
      m.records.push_back(std::move(r));
    } else {
      throw IoError("load_manifest: unknown line tag '" + tag + "'");
    }
  }
  check_disjoint(m);
  return m;
}

void save_density(const std::filesystem::path& path, const Grid& density) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("save_density: cannot open " + path.string());
  os.write(kDensityMagic, sizeof(kDensityMagic));
  const uint32_t h = static_cast<uint32_t>(density.h);
  const uint32_t w = static_cast<uint32_t>(density.w);
  unsigned char dims[8];
  for (int i = 0; i < 4; ++i) dims[i] = static_cast<unsigned char>(h >> (8 * i));
  for (int i = 0; i < 4; ++i) dims[4 + i] = static_cast<unsigned char>(w >> (8 * i));
  os.write(reinterpret_cast<const char*>(dims), 8);
  std::vector<float> row(density.v.size());
  for (size_t i = 0; i < density.v.size(); ++i) row[i] = static_cast<float>(density.v[i]);
  os.write(reinterpret_cast<const char*>(row.data()),
           static_cast<std::streamsize>(row.size() * sizeof(float)));
  if (!os) throw IoError("save_density: write failed for " + path.string());
}

Grid load_density(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingArtifactError("load_density: cannot open " + path.string());
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kDensityMagic, 8) != 0) {
    throw IoError("load_density: bad magic in " + path.string());
  }
  unsigned char dims[8];
  is.read(reinterpret_cast<char*>(dims), 8);
  uint32_t h = 0, w = 0;
  for (int i = 0; i < 4; ++i) h |= static_cast<uint32_t>(dims[i]) << (8 * i);
  for (int i = 0; i < 4; ++i) w |= static_cast<uint32_t>(dims[4 + i]) << (8 * i);
  Grid g(static_cast<int>(h), static_cast<int>(w));
  std::vector<float> row(g.v.size());
  is.read(reinterpret_cast<char*>(row.data()),
          static_cast<std::streamsize>(row.size() * sizeof(float)));
  if (!is) throw IoError("load_density: truncated file " + path.string());
  for (size_t i = 0; i < row.size(); ++i) g.v[i] = row[i];
  return g;
}

}  // namespace zsc
