#include "zsc/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "zsc/error.hpp"

namespace zsc {

namespace {

struct Entry {
  const char* key;
  std::function<std::string(const PipelineConfig&)> get;
  std::function<void(PipelineConfig&, const std::string&)> set;
};

int parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
  }
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const uint64_t x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: bad unsigned for " + key + ": '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for " + key + ": '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: bad bool for " + key + ": '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::istringstream is(v);
  std::string item;
  while (std::getline(is, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const std::string& item : split_list(v)) out.push_back(parse_int(key, item));
  if (out.empty()) throw ConfigError("config: empty list for " + key);
  return out;
}

template <typename T>
std::string join_list(const std::vector<T>& v) {
  std::ostringstream os;
  for (size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

#define ENTRY_INT(key, field)                                                      \
  {key, [](const PipelineConfig& c) { return std::to_string(c.field); },           \
   [](PipelineConfig& c, const std::string& v) { c.field = parse_int(key, v); }}
#define ENTRY_U64(key, field)                                                      \
  {key, [](const PipelineConfig& c) { return std::to_string(c.field); },           \
   [](PipelineConfig& c, const std::string& v) { c.field = parse_u64(key, v); }}
#define ENTRY_DOUBLE(key, field)                                                   \
  {key, [](const PipelineConfig& c) { return fmt_double(c.field); },               \
   [](PipelineConfig& c, const std::string& v) { c.field = parse_double(key, v); }}
#define ENTRY_BOOL(key, field)                                                     \
  {key, [](const PipelineConfig& c) { return c.field ? "true" : "false"; },        \
   [](PipelineConfig& c, const std::string& v) { c.field = parse_bool(key, v); }}
#define ENTRY_STR(key, field)                                                      \
  {key, [](const PipelineConfig& c) { return c.field; },                           \
   [](PipelineConfig& c, const std::string& v) { c.field = v; }}
#define ENTRY_INT_LIST(key, field)                                                 \
  {key, [](const PipelineConfig& c) { return join_list(c.field); },                \
   [](PipelineConfig& c, const std::string& v) { c.field = parse_int_list(key, v); }}
#define ENTRY_STR_LIST(key, field)                                                 \
  {key, [](const PipelineConfig& c) { return join_list(c.field); },                \
   [](PipelineConfig& c, const std::string& v) { c.field = split_list(v); }}

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = {
      ENTRY_STR("data.dir", data_dir),
      ENTRY_INT("data.image_height", image_height),
      ENTRY_INT("data.image_width", image_width),
      ENTRY_INT("data.classes", classes),
      ENTRY_INT("data.images_per_class", images_per_class),
      ENTRY_INT("data.count_min", count_min),
      ENTRY_INT("data.count_max", count_max),
      ENTRY_DOUBLE("data.distractor_fraction", distractor_fraction),
      ENTRY_INT("data.distractor_min", distractor_min),
      ENTRY_INT("data.distractor_max", distractor_max),
      ENTRY_DOUBLE("data.diversity", diversity),
      ENTRY_DOUBLE("data.max_overlap_iou", max_overlap_iou),
      ENTRY_INT("model.channels", channels),
      ENTRY_INT("counter.query_height", query_height),
      ENTRY_INT("counter.exemplar_size", exemplar_size),
      ENTRY_INT("counter.epochs", counter_epochs),
      ENTRY_INT("counter.batch", counter_batch),
      ENTRY_DOUBLE("counter.lr", counter_lr),
      ENTRY_INT("vae.latent_dim", vae_latent_dim),
      ENTRY_INT("vae.semantic_dim", vae_semantic_dim),
      ENTRY_INT("vae.hidden", vae_hidden),
      ENTRY_INT("vae.epochs", vae_epochs),
      ENTRY_INT("vae.batch", vae_batch),
      ENTRY_DOUBLE("vae.lr", vae_lr),
      ENTRY_INT("vae.prototype_samples", vae_prototype_samples),
      ENTRY_INT("pool.size", pool_size),
      ENTRY_INT("pool.k", pool_k),
      ENTRY_STR("pool.provider", pool_provider),
      ENTRY_STR("pool.dir", pool_dir),
      ENTRY_STR("pool.plugin", pool_plugin),
      ENTRY_INT("select.n", select_n),
      ENTRY_INT_LIST("select.window_sizes", window_sizes),
      ENTRY_INT("select.max_proposals", max_proposals),
      ENTRY_DOUBLE("select.heatmap_threshold", heatmap_threshold),
      ENTRY_INT("errpred.epochs", errpred_epochs),
      ENTRY_INT("errpred.batch", errpred_batch),
      ENTRY_DOUBLE("errpred.lr", errpred_lr),
      ENTRY_BOOL("errpred.normalized", errpred_normalized),
      ENTRY_INT("errpred.gt_patches", errpred_gt_patches),
      ENTRY_INT("errpred.proposal_patches", errpred_proposal_patches),
      ENTRY_STR("pipeline.prototype_source", prototype_source),
      ENTRY_INT("pipeline.s", top_s),
      ENTRY_STR_LIST("eval.sources", eval_sources),
      ENTRY_INT_LIST("eval.n_values", eval_n_values),
      ENTRY_INT_LIST("eval.s_values", eval_s_values),
      ENTRY_U64("run.seed", seed),
      ENTRY_INT("run.workers", workers),
      ENTRY_STR("run.out_dir", out_dir),
  };
  return entries;
}

void set_key(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  for (const Entry& e : registry()) {
    if (key == e.key) {
      e.set(cfg, value);
      return;
    }
  }
  throw ConfigError("config: unknown key '" + key + "'");
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

void apply_config_file(PipelineConfig& cfg, const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: missing '=' at " + path.string() + ":" +
                        std::to_string(lineno));
    }
    set_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void apply_override(PipelineConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("config: override must be key=value, got '" + assignment + "'");
  }
  set_key(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::string config_to_text(const PipelineConfig& cfg) {
  std::ostringstream os;
  for (const Entry& e : registry()) os << e.key << " = " << e.get(cfg) << "\n";
  return os.str();
}

void validate(const PipelineConfig& cfg) {
  if (cfg.image_height < 16 || cfg.image_width < 16) {
    throw ConfigError("config: image dims must be >= 16");
  }
  if (cfg.classes < 3) throw ConfigError("config: data.classes must be >= 3");
  if (cfg.count_min < 0 || cfg.count_max < cfg.count_min) {
    throw ConfigError("config: bad count range");
  }
  if (cfg.channels < 2 || cfg.channels % 2 != 0) {
    throw ConfigError("config: model.channels must be even and >= 2");
  }
  if (cfg.prototype_source != "vae" && cfg.prototype_source != "pool" &&
      cfg.prototype_source != "semantic") {
    throw ConfigError("config: pipeline.prototype_source must be vae|pool|semantic");
  }
  if (cfg.pool_provider != "synthetic" && cfg.pool_provider != "file" &&
      cfg.pool_provider != "plugin") {
    throw ConfigError("config: pool.provider must be synthetic|file|plugin");
  }
  if (cfg.pool_k < 1 && cfg.pool_k != -1) {
    throw ConfigError("config: pool.k must be >= 1 (or -1 for 'all')");
  }
  if (cfg.select_n < 1) throw ConfigError("config: select.n must be >= 1");
  if (cfg.top_s < 1) throw ConfigError("config: pipeline.s must be >= 1");
  if (cfg.workers < 1) throw ConfigError("config: run.workers must be >= 1");
  if (cfg.vae_semantic_dim < 10) throw ConfigError("config: vae.semantic_dim must be >= 10");
  for (const std::string& s : cfg.eval_sources) {
    if (s != "vae" && s != "pool" && s != "semantic") {
      throw ConfigError("config: eval.sources entries must be vae|pool|semantic");
    }
  }
}

}  // namespace zsc
