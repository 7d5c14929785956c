#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "zsc/features.hpp"
#include "zsc/nn.hpp"

namespace zsc {

struct VaeConfig {
  int feature_dim = 32;   // selection-space dim the decoder reconstructs
  int latent_dim = 16;    // z
  int semantic_dim = 16;  // conditioning vector a
  int hidden = 64;
  int epochs = 60;
  int batch = 32;
  double lr = 1e-3;
  int prototype_samples = 256;
  uint64_t seed = 0;
};

// Conditional VAE over selection-space features. Encoder and decoder are
// two-layer FC nets; the class semantic embedding is concatenated to the
// input on both sides. Hidden activation LeakyReLU, decoder output ReLU.
class CondVae {
 public:
  explicit CondVae(const VaeConfig& cfg);
  void init_weights(uint64_t seed);

  const VaeConfig& config() const { return cfg_; }
  ParamRegistry& params() { return params_; }
  const ParamRegistry& params() const { return params_; }

  // Deterministic posterior parameters (mu, logvar).
  std::pair<Vec, Vec> encode(const Vec& x, const Vec& a) const;
  Vec decode(const Vec& z, const Vec& a) const;

  void save(const std::filesystem::path& path) const;
  static std::unique_ptr<CondVae> load(const std::filesystem::path& path);

 private:
  friend double vae_example_loss(CondVae&, const Vec&, const Vec&, const Vec&, bool, double);
  VaeConfig cfg_;
  ParamRegistry params_;
  Linear e1_, e2_;  // e2 emits mu | logvar
  Linear g1_, g2_;
};

// Closed-form KL( N(mu, diag exp(logvar)) || N(0, I) ).
double kl_divergence(const Vec& mu, const Vec& logvar);

// KL + squared reconstruction error with the reparameterized latent
// z = mu + exp(logvar/2) * noise. Noise is an explicit argument so the
// value is deterministic.
double vae_loss(const CondVae& vae, const Vec& x, const Vec& a, const Vec& noise);

// Same objective with gradient accumulation; used by training and the
// finite-difference checks.
double vae_example_loss(CondVae& vae, const Vec& x, const Vec& a, const Vec& noise,
                        bool with_grads, double grad_scale = 1.0);

std::vector<Vec> generate_features(const CondVae& vae, const Vec& a, int n, Rng& rng);

// Mean of n generated features; source tag "vae".
ClassPrototype vae_class_prototype(const CondVae& vae, const std::string& class_name,
                                   const Vec& a, int n, Rng& rng);

struct FeatureRecord {
  Vec x;
  Vec a;
  std::string class_name;
};

std::unique_ptr<CondVae> train_vae(const std::vector<FeatureRecord>& records,
                                   const VaeConfig& cfg, std::ostream* log,
                                   std::vector<double>* loss_history = nullptr);

}  // namespace zsc
