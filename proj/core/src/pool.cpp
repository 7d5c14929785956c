#include "zsc/pool.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "zsc/error.hpp"

namespace zsc {

PatchPool build_pool(const std::string& class_name, const PoolProviderFn& provider,
                     int expected_dim) {
  PatchPool pool = provider(class_name);
  if (pool.embeddings.empty()) {
    throw NoProposalsError("pool.build_pool: provider returned an empty pool for " + class_name);
  }
  for (const Vec& e : pool.embeddings) {
    if (static_cast<int>(e.size()) != expected_dim) {
      throw DimensionError("pool.build_pool: embedding dim mismatch in pool for " + class_name);
    }
    require_all_finite(e, "pool.build_pool");
  }
  return pool;
}

PatchPool load_pool_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw MissingArtifactError("pool.load_pool_file: cannot open " + path.string());
  PatchPool pool;
  pool.provenance = PoolProvenance::file;
  size_t m = 0, d = 0;
  is >> pool.class_name >> m >> d;
  if (!is || m == 0 || d == 0) {
    throw IoError("pool.load_pool_file: bad header in " + path.string());
  }
  pool.embeddings.assign(m, Vec(d));
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = 0; j < d; ++j) is >> pool.embeddings[i][j];
  }
  if (!is) throw IoError("pool.load_pool_file: truncated pool in " + path.string());
  return pool;
}

void save_pool_file(const std::filesystem::path& path, const PatchPool& pool) {
  std::ofstream os(path);
  if (!os) throw IoError("pool.save_pool_file: cannot open " + path.string());
  os << pool.class_name << " " << pool.embeddings.size() << " "
     << (pool.embeddings.empty() ? 0 : pool.embeddings[0].size()) << "\n";
  os.precision(17);
  for (const Vec& e : pool.embeddings) {
    for (size_t j = 0; j < e.size(); ++j) os << (j ? " " : "") << e[j];
    os << "\n";
  }
  if (!os) throw IoError("pool.save_pool_file: write failed for " + path.string());
}

PatchPool pool_from_plugin(const std::string& command, const std::string& class_name,
                           const std::filesystem::path& scratch_dir) {
  std::filesystem::create_directories(scratch_dir);
  const std::filesystem::path out = scratch_dir / (class_name + ".pool");
  std::ostringstream cmd;
  cmd << command << " '" << class_name << "' '" << out.string() << "'";
  const int rc = std::system(cmd.str().c_str());
  if (rc != 0) {
    throw IoError("pool.pool_from_plugin: command failed (" + std::to_string(rc) + "): " +
                  cmd.str());
  }
  PatchPool pool = load_pool_file(out);
  pool.provenance = PoolProvenance::plugin;
  return pool;
}

std::vector<std::pair<int, double>> rank_pool_by_query(
    const PatchPool& pool, const std::vector<Vec>& query_embeddings) {
  if (pool.embeddings.empty()) throw DimensionError("pool.rank_pool_by_query: empty pool");
  if (query_embeddings.empty()) {
    throw DimensionError("pool.rank_pool_by_query: no query embeddings");
  }
  std::vector<std::pair<int, double>> scored;
  scored.reserve(pool.embeddings.size());
  const double inv_q = 1.0 / static_cast<double>(query_embeddings.size());
  for (size_t i = 0; i < pool.embeddings.size(); ++i) {
    double acc = 0.0;
    for (const Vec& q : query_embeddings) acc += l2_distance(pool.embeddings[i], q);
    scored.emplace_back(static_cast<int>(i), acc * inv_q);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
  });
  return scored;
}

ClassPrototype pool_class_prototype(const PatchPool& pool,
                                    const std::vector<Vec>& query_embeddings, int k) {
  const int m = static_cast<int>(pool.embeddings.size());
  if (k == kPoolAll) k = m;
  if (k < 1 || k > m) {
    throw DimensionError("pool.pool_class_prototype: k out of range 1.." + std::to_string(m));
  }
  const auto ranked = rank_pool_by_query(pool, query_embeddings);
  std::vector<Vec> top;
  top.reserve(k);
  for (int i = 0; i < k; ++i) top.push_back(pool.embeddings[ranked[i].first]);

  ClassPrototype p;
  p.embedding = mean_embedding(top);
  p.source = PrototypeSource::pool;
  p.class_name = pool.class_name;
  p.sample_count = k;
  return p;
}

}  // namespace zsc
