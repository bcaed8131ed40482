#include "gram/train.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include "gram/errors.hpp"
#include "gram/metrics.hpp"
#include "gram/similarity.hpp"

namespace gram {

namespace {

// splitmix64 finalizer; decorrelates seeds derived from one user seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kHeadTag = 1000;
constexpr std::uint64_t kShuffleTag = 2000;

int modality_of(std::size_t batch_slot, int anchor) {
  // Slot 0 is the anchor; data slots follow the remaining modalities in order.
  if (batch_slot == 0) return anchor;
  const int m = static_cast<int>(batch_slot) - 1;
  return m < anchor ? m : m + 1;
}

struct StepOutcome {
  double l_d2a = 0.0;
  double l_a2d = 0.0;
  double l_dam = 0.0;
  double l_tot = 0.0;
};

// Forward and backward over one minibatch. Gradients are left in the model.
StepOutcome forward_backward(MultimodalModel& model, const MultimodalDataset& data,
                             std::span<const Eigen::Index> rows, const TrainConfig& config) {
  const auto modalities = static_cast<std::size_t>(data.modalities());
  std::vector<ToyEncoder::Cache> caches(modalities);
  std::vector<Eigen::MatrixXd> embedded(modalities);
  for (std::size_t m = 0; m < modalities; ++m) {
    Eigen::MatrixXd raw(static_cast<Eigen::Index>(rows.size()), data.raw_dim());
    for (std::size_t r = 0; r < rows.size(); ++r) raw.row(static_cast<Eigen::Index>(r)) = data.views[m].row(rows[r]);
    embedded[m] = model.encoders()[m].forward(raw, &caches[m]);
  }

  std::vector<ModalityBatch> datas;
  for (std::size_t slot = 1; slot < modalities; ++slot) {
    const int m = modality_of(slot, config.anchor);
    datas.emplace_back("m" + std::to_string(m), embedded[static_cast<std::size_t>(m)]);
  }
  MultimodalBatch batch(ModalityBatch("m" + std::to_string(config.anchor),
                                      embedded[static_cast<std::size_t>(config.anchor)]),
                        std::move(datas));

  const LossReport report = config.objective == Objective::kGram
                                ? gram_objective(batch, model.temperature(), model.head(), config.lambda)
                                : pairwise_cosine_objective(batch, model.temperature());

  for (std::size_t slot = 0; slot < modalities; ++slot) {
    const auto m = static_cast<std::size_t>(modality_of(slot, config.anchor));
    const Eigen::MatrixXd& grad = slot == 0 ? report.grad_anchor : report.grad_datas[slot - 1];
    model.encoders()[m].backward(caches[m], grad);
  }
  model.parameters().back()->grad(0, 0) += report.grad_log_tau;
  return {report.l_d2a, report.l_a2d, report.l_dam, report.l_tot};
}

std::vector<std::vector<Eigen::Index>> make_batches(std::vector<Eigen::Index> rows, int batch_size) {
  std::vector<std::vector<Eigen::Index>> batches;
  for (std::size_t begin = 0; begin < rows.size(); begin += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(rows.size(), begin + static_cast<std::size_t>(batch_size));
    // A single leftover sample has no in-batch negatives.
    if (end - begin < 2) break;
    batches.emplace_back(rows.begin() + static_cast<std::ptrdiff_t>(begin),
                         rows.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 2) throw InvalidSpec("batch_size must be at least 2");
  if (epochs < 0) throw InvalidSpec("epochs must be nonnegative");
  if (!(learning_rate >= 0.0)) throw InvalidSpec("learning_rate must be nonnegative");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw InvalidSpec("beta1 must lie in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw InvalidSpec("beta2 must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw InvalidSpec("epsilon must be positive");
  if (!(weight_decay >= 0.0)) throw InvalidSpec("weight_decay must be nonnegative");
  if (!(lambda >= 0.0)) throw InvalidSpec("lambda must be nonnegative");
  if (!(tau_init >= Temperature::kMin && tau_init <= Temperature::kMax)) {
    throw InvalidSpec("tau_init must lie in [1e-3, 10]");
  }
  if (hidden < 1) throw InvalidSpec("hidden must be positive");
  if (anchor < 0) throw InvalidSpec("anchor must be a modality index");
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw InvalidSpec("holdout_fraction must lie in (0, 1)");
  }
}

MultimodalModel::MultimodalModel(Eigen::Index modalities, Eigen::Index raw_dim, Eigen::Index embed_dim,
                                 Eigen::Index hidden, double tau_init, std::uint64_t seed) {
  for (Eigen::Index m = 0; m < modalities; ++m) {
    encoders_.emplace_back("encoder" + std::to_string(m), raw_dim, hidden, embed_dim,
                           derive_seed(seed, static_cast<std::uint64_t>(m)));
  }
  head_ = MatchingHead(modalities, embed_dim, derive_seed(seed, kHeadTag));
  log_tau_ = Parameter("log_tau", Eigen::MatrixXd::Constant(1, 1, Temperature(tau_init).log_tau()),
                       /*decay=*/false);
}

void MultimodalModel::clamp_temperature() {
  log_tau_.value(0, 0) = Temperature::from_log(log_tau_.value(0, 0)).log_tau();
}

std::vector<Parameter*> MultimodalModel::parameters() {
  std::vector<Parameter*> out;
  for (auto& e : encoders_)
    for (auto* p : e.parameters()) out.push_back(p);
  for (auto* p : head_.parameters()) out.push_back(p);
  out.push_back(&log_tau_);
  return out;
}

std::vector<const Parameter*> MultimodalModel::parameters() const {
  std::vector<const Parameter*> out;
  for (const auto& e : encoders_)
    for (const auto* p : e.parameters()) out.push_back(p);
  for (const auto* p : head_.parameters()) out.push_back(p);
  out.push_back(&log_tau_);
  return out;
}

std::size_t MultimodalModel::parameter_count() const {
  std::size_t count = 0;
  for (const auto* p : parameters()) count += static_cast<std::size_t>(p->value.size());
  return count;
}

void MultimodalModel::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

MultimodalBatch MultimodalModel::embed(const MultimodalDataset& data, std::span<const Eigen::Index> rows,
                                       int anchor) const {
  if (data.modalities() != static_cast<int>(encoders_.size())) {
    throw InconsistentBatch("dataset and model modality counts differ");
  }
  std::vector<Eigen::MatrixXd> embedded;
  for (std::size_t m = 0; m < encoders_.size(); ++m) {
    Eigen::MatrixXd raw(static_cast<Eigen::Index>(rows.size()), data.raw_dim());
    for (std::size_t r = 0; r < rows.size(); ++r) raw.row(static_cast<Eigen::Index>(r)) = data.views[m].row(rows[r]);
    embedded.push_back(encoders_[m].forward(raw));
  }
  std::vector<ModalityBatch> datas;
  for (std::size_t slot = 1; slot < encoders_.size(); ++slot) {
    const int m = modality_of(slot, anchor);
    datas.emplace_back("m" + std::to_string(m), embedded[static_cast<std::size_t>(m)]);
  }
  return MultimodalBatch(ModalityBatch("m" + std::to_string(anchor), embedded[static_cast<std::size_t>(anchor)]),
                         std::move(datas));
}

MultimodalModel make_model(const TrainConfig& config, const MultimodalDataset& data, Eigen::Index embed_dim) {
  config.validate();
  return MultimodalModel(data.modalities(), data.raw_dim(), embed_dim, config.hidden, config.tau_init,
                         config.seed);
}

void TrainingTrace::write_csv(std::ostream& out) const {
  out << kCsvHeader << '\n';
  const auto old_precision = out.precision();
  out << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.epoch << ',' << r.l_d2a << ',' << r.l_a2d << ',' << r.l_dam << ',' << r.matched_vol << ','
        << r.mismatched_vol << ',' << r.r_at_1 << '\n';
  }
  out.precision(old_precision);
}

std::vector<Eigen::Index> train_rows(const TrainConfig& config, Eigen::Index samples) {
  const auto cut = static_cast<Eigen::Index>(std::llround(static_cast<double>(samples) * (1.0 - config.holdout_fraction)));
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(cut));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  return rows;
}

std::vector<Eigen::Index> holdout_rows(const TrainConfig& config, Eigen::Index samples) {
  const auto cut = static_cast<Eigen::Index>(train_rows(config, samples).size());
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(samples - cut));
  std::iota(rows.begin(), rows.end(), cut);
  return rows;
}

HoldoutEval evaluate_holdout(const MultimodalModel& model, const MultimodalDataset& data,
                             const TrainConfig& config) {
  const auto rows = holdout_rows(config, data.samples());
  const auto batch = model.embed(data, rows, config.anchor);
  const auto volumes = cross_volume_matrix(batch);
  const Eigen::Index b = volumes.size();
  HoldoutEval out;
  out.matched_vol = volumes.values.diagonal().mean();
  out.mismatched_vol =
      b > 1 ? (volumes.values.sum() - volumes.values.diagonal().sum()) / static_cast<double>(b * (b - 1)) : 0.0;
  const int ks[] = {1};
  out.r_at_1 = retrieval_recall(volumes, ks).r_at_1();
  return out;
}

TrainResult train(const TrainConfig& config, const MultimodalDataset& data, MultimodalModel model) {
  config.validate();
  if (data.modalities() != static_cast<int>(model.encoders().size())) {
    throw InconsistentBatch("dataset has " + std::to_string(data.modalities()) + " modalities, model has " +
                            std::to_string(model.encoders().size()) + " encoders");
  }
  if (config.anchor >= data.modalities()) throw InvalidSpec("anchor modality out of range");
  const auto rows = train_rows(config, data.samples());
  if (rows.size() < 2 || holdout_rows(config, data.samples()).size() < 2) {
    throw InvalidSpec("too few samples for the train/held-out split");
  }

  TrainResult result;
  const auto record = [&](int epoch, const StepOutcome& sums, std::size_t batches) {
    const double inv = batches > 0 ? 1.0 / static_cast<double>(batches) : 0.0;
    const auto eval = evaluate_holdout(model, data, config);
    result.trace.rows.push_back({epoch, sums.l_d2a * inv, sums.l_a2d * inv, sums.l_dam * inv,
                                 eval.matched_vol, eval.mismatched_vol, eval.r_at_1});
  };
  const auto accumulate = [](StepOutcome& sums, const StepOutcome& step) {
    sums.l_d2a += step.l_d2a;
    sums.l_a2d += step.l_a2d;
    sums.l_dam += step.l_dam;
    sums.l_tot += step.l_tot;
  };

  {
    // Epoch 0: losses of the initial model over the training set, no update.
    StepOutcome sums;
    const auto batches = make_batches(rows, config.batch_size);
    for (const auto& batch : batches) accumulate(sums, forward_backward(model, data, batch, config));
    model.zero_grad();
    record(0, sums, batches.size());
  }

  std::mt19937_64 shuffle_rng(derive_seed(config.seed, kShuffleTag));
  const auto params = model.parameters();
  std::vector<AdamState> states(params.size());
  AdamHyper hyper = config.adam();
  AdamHyper no_decay = hyper;
  no_decay.weight_decay = 0.0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    auto order = rows;
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    const auto batches = make_batches(std::move(order), config.batch_size);
    StepOutcome sums;
    for (const auto& batch : batches) {
      model.zero_grad();
      StepOutcome step;
      try {
        step = forward_backward(model, data, batch, config);
      } catch (const NonFiniteLoss& e) {
        throw TrainingDiverged("epoch " + std::to_string(epoch) + ": " + e.what(), result.trace);
      } catch (const NonFiniteInput& e) {
        throw TrainingDiverged("epoch " + std::to_string(epoch) + ": " + e.what(), result.trace);
      } catch (const ZeroVector& e) {
        // Non-finite weights surface here as NaN embedding norms.
        throw TrainingDiverged("epoch " + std::to_string(epoch) + ": " + e.what(), result.trace);
      }
      if (!std::isfinite(step.l_tot)) {
        throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch), result.trace);
      }
      accumulate(sums, step);
      for (std::size_t p = 0; p < params.size(); ++p) {
        auto& value = params[p]->value;
        auto& grad = params[p]->grad;
        adam_step(std::span<double>(value.data(), static_cast<std::size_t>(value.size())),
                  std::span<const double>(grad.data(), static_cast<std::size_t>(grad.size())), states[p],
                  params[p]->decay ? hyper : no_decay);
      }
      model.clamp_temperature();
      for (const auto* p : params)
        if (!p->value.allFinite()) {
          throw TrainingDiverged("non-finite parameter '" + p->name + "' at epoch " + std::to_string(epoch),
                                 result.trace);
        }
    }
    record(epoch, sums, batches.size());
  }
  model.zero_grad();
  result.model = std::move(model);
  return result;
}

}  // namespace gram
