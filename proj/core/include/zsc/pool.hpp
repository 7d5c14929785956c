#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "zsc/features.hpp"

namespace zsc {

enum class PoolProvenance { file, synthetic_generator, plugin };

// Bank of generated patch embeddings for one class, from which image-specific
// prototypes are assembled.
struct PatchPool {
  std::string class_name;
  std::vector<Vec> embeddings;
  PoolProvenance provenance = PoolProvenance::synthetic_generator;
};

using PoolProviderFn = std::function<PatchPool(const std::string& class_name)>;

// Runs the provider and validates the result (nonempty, uniform dims).
PatchPool build_pool(const std::string& class_name, const PoolProviderFn& provider,
                     int expected_dim);

// Pool file: header "<class_name> <m> <d>", then m lines of d decimals.
PatchPool load_pool_file(const std::filesystem::path& path);
void save_pool_file(const std::filesystem::path& path, const PatchPool& pool);

// Plugin contract: `command <class_name> <output_path>` must write a pool
// file at output_path and exit 0.
PatchPool pool_from_plugin(const std::string& command, const std::string& class_name,
                           const std::filesystem::path& scratch_dir);

// For each pool member g: score = mean_q ||g - q||_2 over all query
// embeddings. Ascending by score; ties broken by lower pool index.
std::vector<std::pair<int, double>> rank_pool_by_query(const PatchPool& pool,
                                                       const std::vector<Vec>& query_embeddings);

inline constexpr int kPoolAll = -1;  // "all" ablation arm

// Mean of the k best-ranked pool embeddings; k = kPoolAll uses the whole
// pool, which reduces to the unweighted pool mean.
ClassPrototype pool_class_prototype(const PatchPool& pool, const std::vector<Vec>& query_embeddings,
                                    int k);

}  // namespace zsc
