// The alternating training loop: each iteration applies one discriminator
// update followed by three transformation-network updates, recomputing every
// forward pass. Batch sampling, both Adam states and the update counters are
// trainer state, all of it checkpointable, so seeded runs are bit-for-bit
// reproducible and resumable.
#pragma once

#include <algorithm>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "panforge/loss/losses.hpp"
#include "panforge/nn/discrim_net.hpp"
#include "panforge/nn/transform_net.hpp"
#include "panforge/train/adam.hpp"
#include "panforge/train/checkpoint.hpp"

namespace panforge {

template <typename Real>
struct TrainerConfig {
  int height = 64;
  int width = 64;
  WidthMult width_mult{1, 4};
  LossConfig<Real> loss;
  AdamConfig adam;
  int batch_size = 4;
  std::uint64_t seed = 1;
};

template <typename Real>
struct IterationReport {
  std::int64_t iteration = 0;
  double j_T = 0;
  double j_D = 0;
  double s = 0;
  double prob_real = 0;
  double prob_fake = 0;
};

/// One tab-separated log line per iteration:
/// iter, J_T, J_D, s, mean prob_real, mean prob_fake.
template <typename Real>
std::string log_line(const IterationReport<Real>& r) {
  char buf[192];
  std::snprintf(buf, sizeof(buf), "%lld\t%.9g\t%.9g\t%.9g\t%.9g\t%.9g",
                static_cast<long long>(r.iteration), r.j_T, r.j_D, r.s, r.prob_real, r.prob_fake);
  return buf;
}

template <typename Real>
class Trainer {
 public:
  explicit Trainer(TrainerConfig<Real> cfg)
      : cfg_(std::move(cfg)),
        T_(TransformNet<Real>::build(cfg_.height, cfg_.width, cfg_.width_mult, cfg_.seed)),
        D_(DiscrimNet<Real>::build(cfg_.height, cfg_.width, cfg_.width_mult, cfg_.seed)),
        t_params_(T_.parameters()),
        d_params_(D_.parameters()),
        adam_T_(t_params_, cfg_.adam),
        adam_D_(d_params_, cfg_.adam),
        rng_(mix_seed(cfg_.seed, 0x7261)) {
    cfg_.loss.validate();
    if (cfg_.batch_size < 1) throw ConfigError("batch size must be at least 1");
  }

  /// Indices of the next batch: distinct, ascending, drawn without
  /// replacement. A dataset no larger than the batch is used whole.
  std::vector<std::int64_t> next_batch_indices(std::int64_t dataset_size) {
    if (dataset_size < 1) throw ConfigError("cannot sample from an empty dataset");
    const std::int64_t want = std::min<std::int64_t>(cfg_.batch_size, dataset_size);
    std::vector<std::int64_t> pool(static_cast<std::size_t>(dataset_size));
    for (std::int64_t i = 0; i < dataset_size; ++i) pool[static_cast<std::size_t>(i)] = i;
    for (std::int64_t i = 0; i < want; ++i) {
      const std::int64_t j = i + rng_.uniform_int(dataset_size - i);
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    }
    pool.resize(static_cast<std::size_t>(want));
    std::sort(pool.begin(), pool.end());
    return pool;
  }

  /// One discriminator update, then three transformation-network updates,
  /// each on a freshly recomputed forward pass. x and y are [B,3,H,W].
  IterationReport<Real> train_iteration(const Tensor<Real>& x, const Tensor<Real>& y) {
    if (x.shape() != y.shape())
      throw ShapeError("train_iteration: input batch " + x.shape().to_string() +
                       " does not match target batch " + y.shape().to_string());
    IterationReport<Real> report;
    report.iteration = ++iteration_;

    // Discriminator update. The fake batch is produced without recording T,
    // so no gradient reaches T here.
    {
      Graph<Real> g;
      Tensor<Real> fake;
      {
        NoRecord<Real> quiet(g);
        fake = T_.forward(g, x, Mode::train);
      }
      auto real_out = D_.forward(g, y, Mode::train);
      auto fake_out = D_.forward(g, fake, Mode::train);
      auto s = perceptual_distance(g, fake_out.feats, real_out.feats, cfg_.loss.lambdas);
      auto jd = loss_D(g, real_out.prob, fake_out.prob, s, cfg_.loss.margin);
      abort_on_nonfinite(jd, g, "loss_D");
      report.j_D = static_cast<double>(jd.value());
      report.s = static_cast<double>(s.value());
      report.prob_real = mean_of(real_out.prob);
      report.prob_fake = mean_of(fake_out.prob);
      zero_grads(d_params_);
      zero_grads(t_params_);
      g.backward(jd);
      adam_D_.step(d_params_);
      ++d_updates_;
    }

    // Three transformation-network updates with D frozen; D's forward (and
    // the real-feature pass) are recomputed every time.
    const bool t_uses_d = cfg_.loss.variant != LossVariant::l2;
    const bool t_uses_pixel = cfg_.loss.variant != LossVariant::pan;
    for (int k = 0; k < 3; ++k) {
      Graph<Real> g;
      auto fake = T_.forward(g, x, Mode::train);
      std::optional<Tensor<Real>> prob_fake, s, pixel;
      if (t_uses_d) {
        auto fake_out = D_.forward(g, fake, Mode::train);
        prob_fake = fake_out.prob;
        if (cfg_.loss.variant == LossVariant::pan) {
          Graph<Real> quiet;
          quiet.set_recording(false);
          auto real_out = D_.forward(quiet, y, Mode::train);
          s = perceptual_distance(g, fake_out.feats, real_out.feats, cfg_.loss.lambdas);
        }
      }
      if (t_uses_pixel) pixel = pixel_l2(g, fake, y);
      auto jt = loss_T(g, prob_fake, s, cfg_.loss, pixel);
      abort_on_nonfinite(jt, g, "loss_T");
      if (k == 0) report.j_T = static_cast<double>(jt.value());
      zero_grads(t_params_);
      zero_grads(d_params_);
      g.backward(jt);
      adam_T_.step(t_params_);
      ++t_updates_;
    }
    return report;
  }

  /// Inference forward with frozen statistics.
  Tensor<Real> infer(const Tensor<Real>& x) {
    Graph<Real> g;
    g.set_recording(false);
    return T_.forward(g, x, Mode::infer);
  }

  void save_checkpoint(const std::filesystem::path& path) const {
    CheckpointData<Real> data;
    data.height = cfg_.height;
    data.width = cfg_.width;
    data.width_mult = cfg_.width_mult;
    data.iteration = iteration_;
    data.d_updates = d_updates_;
    data.t_updates = t_updates_;
    data.adam_t_T = adam_T_.step_count();
    data.adam_t_D = adam_D_.step_count();
    data.t_bn_batches = T_.bn_batches_seen();
    data.d_bn_batches = D_.bn_batches_seen();
    data.seed = cfg_.seed;
    data.rng_state = rng_.serialize();
    append_all(data.tensors, T_.parameters());
    append_all(data.tensors, T_.state_tensors());
    append_all(data.tensors, D_.parameters());
    append_all(data.tensors, D_.state_tensors());
    append_all(data.tensors, adam_T_.moments());
    append_all(data.tensors, adam_D_.moments());
    write_checkpoint(path, data);
  }

  void load_checkpoint(const std::filesystem::path& path) {
    CheckpointData<Real> data = read_checkpoint<Real>(path);
    if (data.height != cfg_.height || data.width != cfg_.width ||
        !(data.width_mult == cfg_.width_mult))
      throw ShapeError("checkpoint network spec disagrees with configuration: file has " +
                       std::to_string(data.height) + "x" + std::to_string(data.width) + " mult " +
                       data.width_mult.to_string() + ", expected " + std::to_string(cfg_.height) +
                       "x" + std::to_string(cfg_.width) + " mult " + cfg_.width_mult.to_string());

    std::map<std::string, const Tensor<Real>*> by_name;
    for (const auto& nt : data.tensors) by_name[nt.name] = &nt.tensor;
    const auto restore = [&](std::vector<NamedTensor<Real>> targets) {
      for (auto& t : targets) {
        auto it = by_name.find(t.name);
        if (it == by_name.end())
          throw IoError("checkpoint is missing tensor '" + t.name + "': " + path.string());
        if (it->second->shape() != t.tensor.shape())
          throw ShapeError("checkpoint tensor '" + t.name + "' has shape " +
                           it->second->shape().to_string() + ", current net expects " +
                           t.tensor.shape().to_string());
        t.tensor.values() = it->second->values();
      }
    };
    restore(T_.parameters());
    restore(T_.state_tensors());
    restore(D_.parameters());
    restore(D_.state_tensors());
    restore(adam_T_.moments());
    restore(adam_D_.moments());

    iteration_ = data.iteration;
    d_updates_ = data.d_updates;
    t_updates_ = data.t_updates;
    adam_T_.set_step_count(data.adam_t_T);
    adam_D_.set_step_count(data.adam_t_D);
    T_.set_bn_batches_seen(data.t_bn_batches);
    D_.set_bn_batches_seen(data.d_bn_batches);
    rng_.restore(data.rng_state);
  }

  std::int64_t iteration() const { return iteration_; }
  std::int64_t d_updates() const { return d_updates_; }
  std::int64_t t_updates() const { return t_updates_; }
  TransformNet<Real>& transform_net() { return T_; }
  DiscrimNet<Real>& discrim_net() { return D_; }
  const TrainerConfig<Real>& config() const { return cfg_; }

 private:
  static void zero_grads(std::vector<NamedTensor<Real>>& params) {
    for (auto& p : params) p.tensor.zero_grad();
  }

  static void append_all(std::vector<NamedTensor<Real>>& out,
                         const std::vector<NamedTensor<Real>>& in) {
    out.insert(out.end(), in.begin(), in.end());
  }

  static double mean_of(const Tensor<Real>& t) {
    double acc = 0;
    for (Real v : t.values()) acc += static_cast<double>(v);
    return acc / static_cast<double>(t.size());
  }

  void abort_on_nonfinite(const Tensor<Real>& loss, const Graph<Real>& g, const char* which) {
    if (loss.all_finite()) return;
    const char* tag = g.first_nonfinite_tag();
    throw NumericError("iteration " + std::to_string(iteration_) + ": " + which +
                       " is non-finite; first non-finite op: " + (tag ? tag : "(input batch)"));
  }

  TrainerConfig<Real> cfg_;
  TransformNet<Real> T_;
  DiscrimNet<Real> D_;
  std::vector<NamedTensor<Real>> t_params_, d_params_;
  AdamState<Real> adam_T_, adam_D_;
  Rng rng_;
  std::int64_t iteration_ = 0, d_updates_ = 0, t_updates_ = 0;
};

}  // namespace panforge
