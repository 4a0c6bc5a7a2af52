#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "toxscreen/config.hpp"
#include "toxscreen/pooling.hpp"
#include "toxscreen/sae.hpp"
#include "toxscreen/scores.hpp"

namespace toxscreen {

struct TrainConfig {
  std::uint64_t epochs = 50;
  double learning_rate = 1e-5;
  double plateau_factor = 0.1;
  std::uint64_t plateau_patience_epochs = 5;
  double sparsity_weight = 1.0;  // lambda on ||z||_1
  std::uint64_t batch_size = 64;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double weight_decay = 0.0;  // L2 on weights (not biases); off by default
  std::uint64_t reduction_ratio = 16;
  std::uint64_t hidden_dim = 512;
  std::uint64_t latent_dim = 256;

  void validate() const;
  // Reads the keys named like the fields above; unknown keys are left for the caller to check.
  static TrainConfig from(const KeyValueConfig& kv);
  std::string to_text() const;
};

// Multiplies the learning rate by `factor` once `patience` consecutive
// epochs pass without a strict improvement of the best metric, then resets
// the counter.
class PlateauSchedule {
 public:
  PlateauSchedule(double initial_lr, double factor, std::uint64_t patience);

  double lr() const { return lr_; }
  // Records one epoch's metric; returns true when the rate was just reduced.
  bool step(double metric);

 private:
  double lr_;
  double factor_;
  std::uint64_t patience_;
  double best_;
  std::uint64_t bad_epochs_ = 0;
};

struct EpochRecord {
  std::uint64_t epoch = 0;  // 1-based
  double train_loss = 0;    // mean L_SAE over training samples
  double val_mse = 0;       // mean reconstruction MSE over validation slides
  double lr = 0;            // rate used for this epoch's updates
  double val_auc = -1;      // -1 when no validation labels were given
};

struct TrainTrace {
  std::vector<EpochRecord> epochs;
  std::uint64_t best_epoch = 0;
  double best_val_mse = 0;
};

struct TrainResult {
  SaeModel model;  // parameters of the best epoch
  TrainTrace trace;
};

// Mini-batch Adam on normal training vectors with seeded shuffling; keeps the
// parameters of the epoch with the lowest validation MSE. A non-finite loss
// aborts with a numeric error naming the epoch and batch.
// `val_labels`, when non-empty, is parallel to `val` rows and only feeds the
// per-epoch AUC column of the trace.
TrainResult train_sae(const PooledSet& train, const PooledSet& val, const TrainConfig& cfg,
                      std::span<const Label> val_labels = {});

// Mean reconstruction MSE over the rows of a pooled set.
double mean_reconstruction_mse(const SaeModel& model, const PooledSet& set);

// One score per row, computed in parallel.
ScoreTable score_pooled(const SaeModel& model, const PooledSet& set);

std::string format_trace_csv(const TrainTrace& trace);

// ---- SAE1 checkpoint ----------------------------------------------------
//
//   "SAE1", u32 version (=1), u32 d, u32 r, u32 hidden, u32 latent,
//   u64 best_epoch, f64 best_val_mse, then binary32 tensors, all little
//   endian, in the order gate W1 b1 W2 b2, encoder W1 b1 W2 b2, decoder
//   W1 b1 W2 b2; weights row-major (out x in). Version 1 means ReLU hidden
//   activations and a linear output layer.

inline constexpr std::uint32_t kSaeVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const SaeModel& model);
SaeModel decode_checkpoint(std::span<const std::uint8_t> bytes, std::string_view source_name);
void save_checkpoint(const std::filesystem::path& path, const SaeModel& model);
SaeModel load_checkpoint(const std::filesystem::path& path);

}  // namespace toxscreen
