#include "zsc/vae.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>

#include "zsc/checkpoint.hpp"
#include "zsc/error.hpp"

namespace zsc {

namespace {
constexpr double kLeakySlope = 0.2;

Vec concat(const Vec& a, const Vec& b) {
  Vec out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}
}  // namespace

CondVae::CondVae(const VaeConfig& cfg)
    : cfg_(cfg),
      e1_(params_, "vae.e1", cfg.feature_dim + cfg.semantic_dim, cfg.hidden),
      e2_(params_, "vae.e2", cfg.hidden, 2 * cfg.latent_dim),
      g1_(params_, "vae.g1", cfg.latent_dim + cfg.semantic_dim, cfg.hidden),
      g2_(params_, "vae.g2", cfg.hidden, cfg.feature_dim) {}

void CondVae::init_weights(uint64_t seed) {
  Rng rng = substream(seed, "vae/init");
  e1_.init_he(rng);
  e2_.init_he(rng);
  g1_.init_he(rng);
  g2_.init_he(rng);
}

std::pair<Vec, Vec> CondVae::encode(const Vec& x, const Vec& a) const {
  if (static_cast<int>(x.size()) != cfg_.feature_dim ||
      static_cast<int>(a.size()) != cfg_.semantic_dim) {
    throw DimensionError("vae.encode: input dims do not match config");
  }
  const Vec h = leaky_relu(e1_.forward(concat(x, a)), kLeakySlope);
  const Vec out = e2_.forward(h);
  Vec mu(out.begin(), out.begin() + cfg_.latent_dim);
  Vec logvar(out.begin() + cfg_.latent_dim, out.end());
  return {std::move(mu), std::move(logvar)};
}

Vec CondVae::decode(const Vec& z, const Vec& a) const {
  if (static_cast<int>(z.size()) != cfg_.latent_dim ||
      static_cast<int>(a.size()) != cfg_.semantic_dim) {
    throw DimensionError("vae.decode: input dims do not match config");
  }
  const Vec h = leaky_relu(g1_.forward(concat(z, a)), kLeakySlope);
  Vec out = g2_.forward(h);
  relu_inplace(out);
  return out;
}

void CondVae::save(const std::filesystem::path& path) const {
  std::map<std::string, std::string> kv;
  kv["kind"] = "vae";
  kv["feature_dim"] = std::to_string(cfg_.feature_dim);
  kv["latent_dim"] = std::to_string(cfg_.latent_dim);
  kv["semantic_dim"] = std::to_string(cfg_.semantic_dim);
  kv["hidden"] = std::to_string(cfg_.hidden);
  kv["epochs"] = std::to_string(cfg_.epochs);
  kv["batch"] = std::to_string(cfg_.batch);
  kv["lr"] = std::to_string(cfg_.lr);
  kv["prototype_samples"] = std::to_string(cfg_.prototype_samples);
  kv["seed"] = std::to_string(cfg_.seed);
  save_checkpoint(path, serialize_kv(kv), params_);
}

std::unique_ptr<CondVae> CondVae::load(const std::filesystem::path& path) {
  const auto kv = peek_checkpoint_config(path);
  if (kv.find("kind") == kv.end() || kv.at("kind") != "vae") {
    throw IoError("vae.load: not a vae checkpoint: " + path.string());
  }
  VaeConfig cfg;
  cfg.feature_dim = std::stoi(kv.at("feature_dim"));
  cfg.latent_dim = std::stoi(kv.at("latent_dim"));
  cfg.semantic_dim = std::stoi(kv.at("semantic_dim"));
  cfg.hidden = std::stoi(kv.at("hidden"));
  cfg.epochs = std::stoi(kv.at("epochs"));
  cfg.batch = std::stoi(kv.at("batch"));
  cfg.lr = std::stod(kv.at("lr"));
  cfg.prototype_samples = std::stoi(kv.at("prototype_samples"));
  cfg.seed = std::stoull(kv.at("seed"));
  auto vae = std::make_unique<CondVae>(cfg);
  load_checkpoint(path, vae->params());
  return vae;
}

double kl_divergence(const Vec& mu, const Vec& logvar) {
  if (mu.size() != logvar.size()) throw DimensionError("vae.kl_divergence: dim mismatch");
  double kl = 0.0;
  for (size_t j = 0; j < mu.size(); ++j) {
    kl += 1.0 + logvar[j] - mu[j] * mu[j] - std::exp(logvar[j]);
  }
  return -0.5 * kl;
}

double vae_loss(const CondVae& vae, const Vec& x, const Vec& a, const Vec& noise) {
  return vae_example_loss(const_cast<CondVae&>(vae), x, a, noise, false);
}

double vae_example_loss(CondVae& vae, const Vec& x, const Vec& a, const Vec& noise,
                        bool with_grads, double grad_scale) {
  const int d_z = vae.cfg_.latent_dim;
  if (static_cast<int>(noise.size()) != d_z) {
    throw DimensionError("vae.vae_loss: noise dim != latent dim");
  }

  const Vec enc_in = concat(x, a);
  const Vec eh_pre = vae.e1_.forward(enc_in);
  const Vec eh = leaky_relu(eh_pre, kLeakySlope);
  const Vec eo = vae.e2_.forward(eh);
  const Vec mu(eo.begin(), eo.begin() + d_z);
  const Vec logvar(eo.begin() + d_z, eo.end());

  Vec z(d_z);
  for (int j = 0; j < d_z; ++j) z[j] = mu[j] + std::exp(0.5 * logvar[j]) * noise[j];

  const Vec dec_in = concat(z, a);
  const Vec gh_pre = vae.g1_.forward(dec_in);
  const Vec gh = leaky_relu(gh_pre, kLeakySlope);
  Vec xhat = vae.g2_.forward(gh);
  relu_inplace(xhat);

  double recon = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double d = xhat[i] - x[i];
    recon += d * d;
  }
  const double loss = kl_divergence(mu, logvar) + recon;
  if (!with_grads) return loss;

  // Decoder path.
  Vec g_xhat(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    g_xhat[i] = 2.0 * (xhat[i] - x[i]) * grad_scale;
  }
  Vec g = relu_backward(xhat, g_xhat);
  g = vae.g2_.backward(gh, g);
  g = leaky_relu_backward(gh, g, kLeakySlope);
  const Vec g_dec_in = vae.g1_.backward(dec_in, g);

  // Reparameterization + KL terms.
  Vec g_mu(d_z), g_logvar(d_z);
  for (int j = 0; j < d_z; ++j) {
    const double gz = g_dec_in[j];
    g_mu[j] = gz + mu[j] * grad_scale;
    g_logvar[j] = gz * noise[j] * 0.5 * std::exp(0.5 * logvar[j]) +
                  0.5 * (std::exp(logvar[j]) - 1.0) * grad_scale;
  }
  Vec g_eo = concat(g_mu, g_logvar);
  g = vae.e2_.backward(eh, g_eo);
  g = leaky_relu_backward(eh, g, kLeakySlope);
  vae.e1_.backward(enc_in, g);
  return loss;
}

std::vector<Vec> generate_features(const CondVae& vae, const Vec& a, int n, Rng& rng) {
  if (n < 1) throw DimensionError("vae.generate_features: n must be >= 1");
  const int d_z = vae.config().latent_dim;
  std::vector<Vec> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    Vec z(d_z);
    for (int j = 0; j < d_z; ++j) z[j] = rng.normal();
    out.push_back(vae.decode(z, a));
  }
  return out;
}

ClassPrototype vae_class_prototype(const CondVae& vae, const std::string& class_name,
                                   const Vec& a, int n, Rng& rng) {
  ClassPrototype p;
  p.embedding = mean_embedding(generate_features(vae, a, n, rng));
  require_all_finite(p.embedding, "vae.vae_class_prototype");
  p.source = PrototypeSource::vae;
  p.class_name = class_name;
  p.sample_count = n;
  return p;
}

std::unique_ptr<CondVae> train_vae(const std::vector<FeatureRecord>& records,
                                   const VaeConfig& cfg, std::ostream* log,
                                   std::vector<double>* loss_history) {
  std::set<std::string> classes;
  for (const FeatureRecord& r : records) classes.insert(r.class_name);
  if (classes.size() < 2) {
    throw DimensionError("vae.train_vae: need records from at least 2 classes");
  }

  auto vae = std::make_unique<CondVae>(cfg);
  vae->init_weights(cfg.seed);
  Adam opt(cfg.lr);
  Rng shuffle_rng = substream(cfg.seed, "vae/shuffle");
  Rng noise_rng = substream(cfg.seed, "vae/noise");

  std::vector<size_t> order(records.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (size_t start = 0; start < order.size(); start += cfg.batch) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch));
      const double scale = 1.0 / static_cast<double>(end - start);
      vae->params().zero_grads();
      for (size_t i = start; i < end; ++i) {
        const FeatureRecord& r = records[order[i]];
        Vec noise(cfg.latent_dim);
        for (double& v : noise) v = noise_rng.normal();
        epoch_loss += vae_example_loss(*vae, r.x, r.a, noise, true, scale);
      }
      opt.step(vae->params());
    }
    epoch_loss /= static_cast<double>(records.size());
    require_finite(epoch_loss, "vae.train_vae");
    if (log) (*log) << "vae epoch " << epoch << " loss " << epoch_loss << "\n";
    if (loss_history) loss_history->push_back(epoch_loss);
  }
  return vae;
}

}  // namespace zsc
