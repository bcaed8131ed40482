#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gram/encoder.hpp"
#include "gram/errors.hpp"
#include "gram/loss.hpp"
#include "gram/matching_head.hpp"
#include "gram/optim.hpp"
#include "gram/synth.hpp"

namespace gram {

enum class Objective {
  kGram,            // volume contrastive terms plus data-anchor matching
  kPairwiseCosine,  // anchor-bridged pairwise cosine baseline
};

struct TrainConfig {
  int batch_size = 64;
  int epochs = 10;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
  double lambda = kDamWeight;
  double tau_init = Temperature::kInitial;
  int hidden = 128;
  int anchor = 0;  // modality used as anchor
  double holdout_fraction = 0.2;
  Objective objective = Objective::kGram;
  std::uint64_t seed = 0;

  AdamHyper adam() const { return {learning_rate, beta1, beta2, epsilon, weight_decay}; }
  // Throws InvalidSpec.
  void validate() const;
};

// Encoders, matching head and temperature trained together.
class MultimodalModel {
 public:
  MultimodalModel() = default;
  MultimodalModel(Eigen::Index modalities, Eigen::Index raw_dim, Eigen::Index embed_dim,
                  Eigen::Index hidden, double tau_init, std::uint64_t seed);

  std::vector<ToyEncoder>& encoders() { return encoders_; }
  const std::vector<ToyEncoder>& encoders() const { return encoders_; }
  MatchingHead& head() { return head_; }
  const MatchingHead& head() const { return head_; }
  Temperature temperature() const { return Temperature::from_log(log_tau_.value(0, 0)); }
  // Re-applies the temperature clamp after an update.
  void clamp_temperature();

  // Every trainable tensor, in a fixed order: encoders, head, log(tau).
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::size_t parameter_count() const;
  void zero_grad();

  // Encodes rows `rows` of every view into a batch anchored at `anchor`.
  MultimodalBatch embed(const MultimodalDataset& data, std::span<const Eigen::Index> rows,
                        int anchor) const;

 private:
  std::vector<ToyEncoder> encoders_;
  MatchingHead head_;
  Parameter log_tau_;
};

MultimodalModel make_model(const TrainConfig& config, const MultimodalDataset& data,
                           Eigen::Index embed_dim);

struct EpochRecord {
  int epoch = 0;
  double l_d2a = 0.0;
  double l_a2d = 0.0;
  double l_dam = 0.0;
  double matched_vol = 0.0;
  double mismatched_vol = 0.0;
  double r_at_1 = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

struct TrainingTrace {
  std::vector<EpochRecord> rows;

  static constexpr const char* kCsvHeader = "epoch,l_d2a,l_a2d,l_dam,matched_vol,mismatched_vol,r_at_1";
  void write_csv(std::ostream& out) const;
  bool operator==(const TrainingTrace&) const = default;
};

class TrainingDiverged : public DivergedTraining {
 public:
  TrainingDiverged(const std::string& what, TrainingTrace trace)
      : DivergedTraining(what), trace_(std::move(trace)) {}
  const TrainingTrace& trace() const { return trace_; }

 private:
  TrainingTrace trace_;
};

struct TrainResult {
  TrainingTrace trace;
  MultimodalModel model;
};

// Held-out evaluation: mean matched and mismatched volumes of the full
// held-out cross-volume matrix and its data-to-anchor R@1.
struct HoldoutEval {
  double matched_vol = 0.0;
  double mismatched_vol = 0.0;
  double r_at_1 = 0.0;
};

// Training rows are the first (1 - holdout_fraction) of the sample ids, the
// rest are held out.
std::vector<Eigen::Index> train_rows(const TrainConfig& config, Eigen::Index samples);
std::vector<Eigen::Index> holdout_rows(const TrainConfig& config, Eigen::Index samples);

HoldoutEval evaluate_holdout(const MultimodalModel& model, const MultimodalDataset& data,
                             const TrainConfig& config);

// Minibatch AdamW training. Row 0 of the trace is evaluated before the first
// update; row e summarizes epoch e. Deterministic for a fixed seed. Throws
// TrainingDiverged (carrying the partial trace) on a non-finite loss.
TrainResult train(const TrainConfig& config, const MultimodalDataset& data, MultimodalModel model);

}  // namespace gram
