#include "zsc/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "zsc/error.hpp"

namespace zsc {

namespace {

constexpr char kMagic[8] = {'Z', 'S', 'C', 'K', 'P', 'T', '1', '\n'};
constexpr uint32_t kFormatVersion = 1;

template <typename T>
void write_le(std::ostream& os, T v) {
  static_assert(std::is_integral_v<T>);
  unsigned char buf[sizeof(T)];
  for (size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  T v = 0;
  for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
  return v;
}

void write_f64_raw(std::ostream& os, const std::vector<double>& v) {
  // Little-endian host assumed; asserted below once per save.
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void check_host_endianness() {
  const uint32_t probe = 1;
  unsigned char first;
  std::memcpy(&first, &probe, 1);
  if (first != 1) throw IoError("checkpoint: big-endian hosts are not supported");
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const std::string& config_text,
                     const ParamRegistry& params) {
  check_host_endianness();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("save_checkpoint: cannot open " + path.string());

  os.write(kMagic, sizeof(kMagic));
  write_le<uint32_t>(os, kFormatVersion);
  write_le<uint32_t>(os, static_cast<uint32_t>(config_text.size()));
  os.write(config_text.data(), static_cast<std::streamsize>(config_text.size()));
  write_le<uint32_t>(os, static_cast<uint32_t>(params.arrays().size()));
  for (const auto& a : params.arrays()) {
    write_le<uint16_t>(os, static_cast<uint16_t>(a->name.size()));
    os.write(a->name.data(), static_cast<std::streamsize>(a->name.size()));
    os.put(0);  // dtype tag: float64
    os.put(static_cast<char>(a->shape.size()));
    for (int d : a->shape) write_le<uint32_t>(os, static_cast<uint32_t>(d));
    write_f64_raw(os, a->w);
  }
  if (!os) throw IoError("save_checkpoint: write failed for " + path.string());
}

std::map<std::string, std::string> load_checkpoint(const std::filesystem::path& path,
                                                   ParamRegistry& params) {
  check_host_endianness();
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingArtifactError("load_checkpoint: cannot open " + path.string());

  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError("load_checkpoint: bad magic in " + path.string());
  }
  const auto version = read_le<uint32_t>(is);
  if (version != kFormatVersion) {
    throw IoError("load_checkpoint: unsupported format version in " + path.string());
  }
  const auto config_len = read_le<uint32_t>(is);
  std::string config_text(config_len, '\0');
  is.read(config_text.data(), config_len);

  const auto n_arrays = read_le<uint32_t>(is);
  if (n_arrays != params.arrays().size()) {
    throw IoError("load_checkpoint: array count mismatch in " + path.string());
  }
  for (uint32_t i = 0; i < n_arrays; ++i) {
    const auto name_len = read_le<uint16_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const int dtype = is.get();
    if (dtype != 0) throw IoError("load_checkpoint: unsupported dtype for " + name);
    const int ndim = is.get();
    std::vector<int> shape(ndim);
    for (int d = 0; d < ndim; ++d) shape[d] = static_cast<int>(read_le<uint32_t>(is));

    ParamArray* arr = params.find(name);
    if (!arr) throw IoError("load_checkpoint: unexpected array " + name);
    if (arr->shape != shape) throw IoError("load_checkpoint: shape mismatch for " + name);
    is.read(reinterpret_cast<char*>(arr->w.data()),
            static_cast<std::streamsize>(arr->size() * sizeof(double)));
  }
  if (!is) throw IoError("load_checkpoint: truncated archive " + path.string());
  return parse_kv(config_text);
}

std::map<std::string, std::string> peek_checkpoint_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingArtifactError("checkpoint: cannot open " + path.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError("checkpoint: bad magic in " + path.string());
  }
  read_le<uint32_t>(is);
  const auto config_len = read_le<uint32_t>(is);
  std::string config_text(config_len, '\0');
  is.read(config_text.data(), config_len);
  if (!is) throw IoError("checkpoint: truncated archive " + path.string());
  return parse_kv(config_text);
}

std::string serialize_kv(const std::map<std::string, std::string>& kv) {
  std::ostringstream os;
  for (const auto& [k, v] : kv) os << k << " = " << v << "\n";
  return os.str();
}

std::map<std::string, std::string> parse_kv(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return kv;
}

}  // namespace zsc
