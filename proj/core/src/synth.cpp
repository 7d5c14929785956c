#include "zsc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "zsc/error.hpp"
#include "zsc/png_io.hpp"

namespace zsc {

namespace {

struct Palette {
  const char* name;
  std::array<double, 3> rgb;
};

constexpr Palette kPalette[] = {
    {"red", {0.85, 0.16, 0.16}},    {"green", {0.18, 0.68, 0.22}},
    {"blue", {0.20, 0.32, 0.85}},   {"yellow", {0.90, 0.84, 0.20}},
    {"magenta", {0.84, 0.22, 0.78}}, {"cyan", {0.20, 0.78, 0.84}},
    {"orange", {0.94, 0.55, 0.12}}, {"teal", {0.12, 0.55, 0.50}},
    {"purple", {0.55, 0.22, 0.75}}, {"olive", {0.52, 0.55, 0.16}},
    {"maroon", {0.55, 0.14, 0.20}}, {"navy", {0.12, 0.16, 0.50}},
};

constexpr const char* kShapeNames[] = {"disc", "square", "triangle", "cross", "ring"};
constexpr double kBackground = 0.84;
constexpr double kBackgroundNoise = 0.03;

// Appearance drawn once per image (or per generated pool patch).
struct StyleVariant {
  std::array<double, 3> color_shift{};
  double size_scale = 1.0;
  double param_shift = 0.0;
};

StyleVariant draw_variant(Rng& rng, double diversity) {
  StyleVariant v;
  for (double& c : v.color_shift) c = diversity * rng.uniform(-0.35, 0.35);
  v.size_scale = 1.0 + diversity * rng.uniform(-0.3, 0.3);
  v.param_shift = diversity * rng.uniform(-0.25, 0.25);
  return v;
}

struct ObjectInstance {
  double cx = 0.0, cy = 0.0, r = 4.0;
  std::array<double, 3> color{};
  ShapeKind shape = ShapeKind::disc;
  double shape_param = 0.5;
};

bool inside_shape(const ObjectInstance& o, double px, double py) {
  const double dx = px - o.cx, dy = py - o.cy;
  const double r = o.r;
  switch (o.shape) {
    case ShapeKind::disc:
      return dx * dx + dy * dy <= r * r;
    case ShapeKind::square:
      return std::abs(dx) <= 0.9 * r && std::abs(dy) <= 0.9 * r;
    case ShapeKind::triangle: {
      // Upward triangle: apex (0,-r), base at y = +0.8r.
      if (dy < -r || dy > 0.8 * r) return false;
      const double half_width = 0.9 * r * (dy + r) / (1.8 * r);
      return std::abs(dx) <= half_width;
    }
    case ShapeKind::cross: {
      const double arm = std::clamp(o.shape_param, 0.2, 0.55) * r;
      return (std::abs(dx) <= arm && std::abs(dy) <= r) ||
             (std::abs(dy) <= arm && std::abs(dx) <= r);
    }
    case ShapeKind::ring: {
      const double inner = std::clamp(o.shape_param, 0.3, 0.75) * r;
      const double d2 = dx * dx + dy * dy;
      return d2 <= r * r && d2 >= inner * inner;
    }
  }
  return false;
}

// 4x4 supersampled coverage in [0,1] for the pixel (x, y).
double coverage(const ObjectInstance& o, int x, int y) {
  int hit = 0;
  for (int sy = 0; sy < 4; ++sy) {
    for (int sx = 0; sx < 4; ++sx) {
      const double px = x + (sx + 0.5) / 4.0;
      const double py = y + (sy + 0.5) / 4.0;
      if (inside_shape(o, px, py)) ++hit;
    }
  }
  return hit / 16.0;
}

void paint(Image& img, const ObjectInstance& o) {
  const int x0 = std::max(0, static_cast<int>(std::floor(o.cx - o.r - 1)));
  const int y0 = std::max(0, static_cast<int>(std::floor(o.cy - o.r - 1)));
  const int x1 = std::min(img.width(), static_cast<int>(std::ceil(o.cx + o.r + 1)));
  const int y1 = std::min(img.height(), static_cast<int>(std::ceil(o.cy + o.r + 1)));
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const double a = coverage(o, x, y);
      if (a <= 0.0) continue;
      double* px = img.t.site(y, x);
      for (int c = 0; c < 3; ++c) px[c] = (1.0 - a) * px[c] + a * o.color[c];
    }
  }
}

Rect object_box(const ObjectInstance& o) {
  return {static_cast<int>(std::floor(o.cx - o.r)), static_cast<int>(std::floor(o.cy - o.r)),
          static_cast<int>(std::ceil(o.cx + o.r)), static_cast<int>(std::ceil(o.cy + o.r))};
}

void add_density_kernel(Grid& density, double cx, double cy, double radius) {
  const double sigma = radius / 2.0;
  const double cutoff = 4.0 * sigma;
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - cutoff)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - cutoff)));
  const int x1 = std::min(density.w - 1, static_cast<int>(std::ceil(cx + cutoff)));
  const int y1 = std::min(density.h - 1, static_cast<int>(std::ceil(cy + cutoff)));
  const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);

  double mass = 0.0;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      const double d2 = dx * dx + dy * dy;
      if (d2 > cutoff * cutoff) continue;
      mass += std::exp(-d2 * inv_two_sigma2);
    }
  }
  if (mass <= 0.0) {
    throw PlacementFailureError("synth.generate_scene: empty density kernel support");
  }
  // Renormalized to unit mass per object, including boundary truncation.
  const double inv_mass = 1.0 / mass;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      const double d2 = dx * dx + dy * dy;
      if (d2 > cutoff * cutoff) continue;
      density.at(y, x) += std::exp(-d2 * inv_two_sigma2) * inv_mass;
    }
  }
}

ObjectInstance make_instance(const ClassStyle& style, const StyleVariant& variant, Rng& rng,
                             double diversity) {
  ObjectInstance o;
  o.shape = style.shape;
  o.r = std::clamp(rng.uniform(style.r_min, style.r_max) * variant.size_scale, 3.0, 12.0);
  o.shape_param = style.shape_param + variant.param_shift;
  const double brightness = 1.0 + 0.2 * diversity * rng.uniform(-1.0, 1.0);
  for (int c = 0; c < 3; ++c) {
    o.color[c] = std::clamp((style.color[c] + variant.color_shift[c]) * brightness, 0.0, 1.0);
  }
  return o;
}

bool place_instance(ObjectInstance& o, const std::vector<Rect>& placed, int h, int w,
                    double max_iou, Rng& rng) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    o.cx = rng.uniform(o.r + 1.0, w - o.r - 1.0);
    o.cy = rng.uniform(o.r + 1.0, h - o.r - 1.0);
    const Rect box = object_box(o);
    bool ok = true;
    for (const Rect& other : placed) {
      if (rect_iou(box, other) > max_iou) {
        ok = false;
        break;
      }
    }
    if (ok) return true;
  }
  return false;
}

}  // namespace

std::vector<ClassStyle> default_class_styles(int n_classes) {
  if (n_classes < 1 || n_classes > static_cast<int>(std::size(kPalette))) {
    throw ConfigError("synth.default_class_styles: class count must be in 1.." +
                      std::to_string(std::size(kPalette)));
  }
  std::vector<ClassStyle> styles;
  styles.reserve(n_classes);
  for (int i = 0; i < n_classes; ++i) {
    ClassStyle s;
    s.id = i;
    s.shape = static_cast<ShapeKind>(i % 5);
    s.color = kPalette[i].rgb;
    s.name = std::string(kPalette[i].name) + "-" + kShapeNames[i % 5];
    s.r_min = 4.0 + (i % 3);
    s.r_max = s.r_min + 3.0 + (i % 3);
    s.shape_param = s.shape == ShapeKind::ring ? 0.55 : 0.35;
    styles.push_back(std::move(s));
  }
  return styles;
}

const ClassStyle& style_by_name(const std::vector<ClassStyle>& styles, const std::string& name) {
  for (const ClassStyle& s : styles) {
    if (s.name == name) return s;
  }
  throw UnknownClassError("synth: unknown class '" + name + "'");
}

Scene generate_scene(const SceneSpec& spec, const std::vector<ClassStyle>& styles) {
  if (spec.class_id < 0 || spec.class_id >= static_cast<int>(styles.size())) {
    throw UnknownClassError("synth.generate_scene: class id out of range");
  }
  Rng rng(spec.seed);
  Scene scene;
  scene.image = Image(spec.height, spec.width);
  scene.density = Grid(spec.height, spec.width);

  for (double& v : scene.image.t.v) {
    v = kBackground + rng.uniform(-kBackgroundNoise, kBackgroundNoise);
  }

  const ClassStyle& target = styles[spec.class_id];
  const StyleVariant target_variant = draw_variant(rng, spec.diversity);

  std::vector<Rect> placed;
  std::vector<ObjectInstance> instances;

  for (int i = 0; i < spec.object_count; ++i) {
    ObjectInstance o = make_instance(target, target_variant, rng, spec.diversity);
    if (!place_instance(o, placed, spec.height, spec.width, spec.max_overlap_iou, rng)) {
      throw PlacementFailureError("synth.generate_scene: cannot place object " +
                                  std::to_string(i) + " of " + target.name);
    }
    placed.push_back(object_box(o));
    scene.boxes.push_back(placed.back());
    instances.push_back(o);
    add_density_kernel(scene.density, o.cx, o.cy, o.r);
  }

  for (const auto& [cls, count] : spec.distractors) {
    if (cls < 0 || cls >= static_cast<int>(styles.size())) {
      throw UnknownClassError("synth.generate_scene: distractor class id out of range");
    }
    const ClassStyle& style = styles[cls];
    const StyleVariant variant = draw_variant(rng, spec.diversity);
    for (int i = 0; i < count; ++i) {
      ObjectInstance o = make_instance(style, variant, rng, spec.diversity);
      if (!place_instance(o, placed, spec.height, spec.width, spec.max_overlap_iou, rng)) {
        throw PlacementFailureError("synth.generate_scene: cannot place distractor of " +
                                    style.name);
      }
      placed.push_back(object_box(o));
      instances.push_back(o);
      // Distractors add no density mass.
    }
  }

  for (const ObjectInstance& o : instances) paint(scene.image, o);
  quantize_u8(scene.image);
  return scene;
}

Vec class_semantic_embedding(const ClassStyle& style, int d_s) {
  if (d_s < 10) throw ConfigError("synth.class_semantic_embedding: d_s must be >= 10");
  Vec a(d_s, 0.0);
  a[static_cast<int>(style.shape)] = 1.0;
  a[5] = style.color[0];
  a[6] = style.color[1];
  a[7] = style.color[2];
  a[8] = 0.5 * (style.r_min + style.r_max) / 12.0;
  a[9] = (style.r_max - style.r_min) / 12.0;
  Rng jitter = substream(fnv1a64(style.name), "synth/semantic-jitter");
  for (int i = 10; i < d_s; ++i) a[i] = jitter.normal(0.0, 0.1);
  return a;
}

namespace {

Image render_single_patch(const ClassStyle& style, const StyleVariant& variant, Rng& rng,
                          double diversity, bool noise) {
  ObjectInstance o = make_instance(style, variant, rng, diversity);
  const int side = std::max(16, static_cast<int>(std::ceil(o.r * 2.0 * 1.5)));
  Image patch(side, side);
  for (double& v : patch.t.v) {
    v = kBackground + (noise ? rng.uniform(-kBackgroundNoise, kBackgroundNoise) : 0.0);
  }
  o.cx = side / 2.0 + (noise ? rng.uniform(-1.0, 1.0) : 0.0);
  o.cy = side / 2.0 + (noise ? rng.uniform(-1.0, 1.0) : 0.0);
  paint(patch, o);
  quantize_u8(patch);
  return patch;
}

}  // namespace

std::vector<Vec> synthesize_pool_embeddings(const ClassStyle& style, int m, double diversity,
                                            Rng& rng, const PatchEmbedder& embedder) {
  std::vector<Vec> out;
  out.reserve(m);
  for (int i = 0; i < m; ++i) {
    const StyleVariant variant = draw_variant(rng, diversity);
    const Image patch = render_single_patch(style, variant, rng, diversity, true);
    out.push_back(embedder.embed(patch));
  }
  return out;
}

Vec canonical_class_embedding(const ClassStyle& style, const PatchEmbedder& embedder) {
  // Jitter-free nominal rendering at the middle of the size range.
  ClassStyle nominal = style;
  nominal.r_min = nominal.r_max = 0.5 * (style.r_min + style.r_max);
  Rng rng(fnv1a64(style.name));
  const StyleVariant variant{};  // zero shifts
  const Image patch = render_single_patch(nominal, variant, rng, 0.0, false);
  return embedder.embed(patch);
}

DatasetManifest build_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  if (cfg.classes < 3) throw ConfigError("synth.build_dataset: need at least 3 classes");
  const std::vector<ClassStyle> styles = default_class_styles(cfg.classes);

  // Split by style order: roughly 8/2/2 at the default 12 classes.
  const int n_val = std::max(1, cfg.classes / 6);
  const int n_test = std::max(1, cfg.classes / 6);
  const int n_train = cfg.classes - n_val - n_test;

  DatasetManifest manifest;
  manifest.seed = cfg.seed;
  std::map<int, std::string> split_of;
  for (int i = 0; i < cfg.classes; ++i) {
    const std::string split = i < n_train ? "train" : (i < n_train + n_val ? "val" : "test");
    manifest.split_classes[split].push_back(styles[i].name);
    split_of[i] = split;
  }

  std::filesystem::create_directories(out_dir / "images");
  std::filesystem::create_directories(out_dir / "density");

  for (int ci = 0; ci < cfg.classes; ++ci) {
    const ClassStyle& style = styles[ci];
    const std::string& split = split_of[ci];
    // Distractors come from the same split to keep class sets disjoint.
    std::vector<int> split_peers;
    for (int o = 0; o < cfg.classes; ++o) {
      if (o != ci && split_of[o] == split) split_peers.push_back(o);
    }
    for (int i = 0; i < cfg.images_per_class; ++i) {
      const std::string id = style.name + "-" + (i < 10 ? "00" : (i < 100 ? "0" : "")) +
                             std::to_string(i);
      Rng spec_rng = substream(cfg.seed, "synth/spec/" + id);
      SceneSpec spec;
      spec.class_id = ci;
      spec.object_count = spec_rng.uniform_int(cfg.count_min, cfg.count_max);
      spec.height = cfg.image_height;
      spec.width = cfg.image_width;
      spec.seed = substream_seed(cfg.seed, "synth/scene/" + id);
      spec.diversity = cfg.diversity;
      spec.max_overlap_iou = cfg.max_overlap_iou;
      if (!split_peers.empty() && spec_rng.uniform() < cfg.distractor_fraction) {
        const int cls = split_peers[spec_rng.uniform_int(0, static_cast<int>(split_peers.size()) - 1)];
        const int count = spec_rng.uniform_int(cfg.distractor_min, cfg.distractor_max);
        spec.distractors.emplace_back(cls, count);
      }

      const Scene scene = generate_scene(spec, styles);
      ImageRecord rec;
      rec.id = id;
      rec.split = split;
      rec.class_name = style.name;
      rec.gt_count = spec.object_count;
      rec.image_path = "images/" + id + ".png";
      rec.density_path = "density/" + id + ".den";
      rec.boxes = scene.boxes;
      save_png(out_dir / rec.image_path, scene.image);
      save_density(out_dir / rec.density_path, scene.density);
      manifest.records.push_back(std::move(rec));
    }
  }
  save_manifest(out_dir / "manifest.txt", manifest);
  return manifest;
}

PoolProviderFn make_synthetic_pool_provider(const std::vector<ClassStyle>& styles,
                                            const PatchEmbedder& embedder, int m,
                                            double diversity, uint64_t root_seed) {
  return [&styles, &embedder, m, diversity, root_seed](const std::string& class_name) {
    const ClassStyle& style = style_by_name(styles, class_name);
    Rng rng = substream(root_seed, "pool/synthetic/" + class_name);
    PatchPool pool;
    pool.class_name = class_name;
    pool.provenance = PoolProvenance::synthetic_generator;
    pool.embeddings = synthesize_pool_embeddings(style, m, diversity, rng, embedder);
    return pool;
  };
}

std::map<std::string, Vec> load_semantic_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw MissingArtifactError("synth.load_semantic_file: cannot open " + path.string());
  std::map<std::string, Vec> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string name;
    ls >> name;
    Vec v;
    double x;
    while (ls >> x) v.push_back(x);
    if (name.empty() || v.empty()) {
      throw IoError("synth.load_semantic_file: malformed line: " + line);
    }
    out[name] = std::move(v);
  }
  return out;
}

void save_semantic_file(const std::filesystem::path& path,
                        const std::map<std::string, Vec>& embeddings) {
  std::ofstream os(path);
  if (!os) throw IoError("synth.save_semantic_file: cannot open " + path.string());
  os.precision(17);
  for (const auto& [name, v] : embeddings) {
    os << name;
    for (double x : v) os << " " << x;
    os << "\n";
  }
}

}  // namespace zsc
