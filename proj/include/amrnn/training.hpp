#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "amrnn/model.hpp"

namespace amrnn {

struct TrainConfig {
  double learning_rate = 1e-5;
  double momentum = 0.9;
  double rms_decay = 0.9;
  double epsilon = 1e-8;
  double dropout_rate = 0.2;
  int batch_size = 40;
  int max_epochs = 50;
  std::vector<int> hop_search = {1, 2, 3};
  std::uint64_t seed = 1;
  // Squared error against the 0/1 target vector by default; softmax
  // cross-entropy over the four scores when set.
  bool cross_entropy = false;

  void validate() const;
};

// Per-parameter squared-gradient accumulator and momentum buffer.
struct RmsPropState {
  struct Slot {
    Tensor r, v;
  };
  std::vector<Slot> slots;
  long step = 0;

  static RmsPropState init(const std::vector<Tensor*>& params);
};

// r <- g*r + (1-g)*grad^2;  v <- mu*v - lr*grad/sqrt(r+eps);  theta <- theta + v
void rmsprop_update(RmsPropState& state, const std::vector<Tensor*>& params,
                    const std::vector<Tensor>& grads, const TrainConfig& cfg);

// Target vector for a choice index: 1 at the answer, 0 elsewhere.
Tensor target_vector(int answer);

// Differentiable loss over the four answer scores.
Tensor scores_loss(Tape& tape, const std::array<Tensor, 4>& scores, int answer,
                   bool cross_entropy);

enum class LossMode { train, eval };

// Loss of one example; train mode applies dropout driven by `dropout_rng`.
double example_loss(const AmrnnModel& model, const Example& example, const TrainConfig& cfg,
                    LossMode mode, Rng* dropout_rng = nullptr);

struct ExampleGradients {
  double loss = 0.0;
  std::vector<Tensor> grads;  // one per model parameter, in parameters() order
};

ExampleGradients example_loss_gradients(const AmrnnModel& model, const Example& example,
                                        const TrainConfig& cfg, LossMode mode,
                                        Rng* dropout_rng = nullptr);

struct EpochStats {
  int epoch = 0;
  double mean_train_loss = 0.0;
  double dev_accuracy = 0.0;
};

struct TrainResult {
  AmrnnModel model;  // snapshot with the best dev accuracy
  std::vector<EpochStats> history;
};

// Seeded per-epoch shuffling, mean gradient per batch, one optimizer step per
// batch. Returns the parameter snapshot with the best dev accuracy (the final
// parameters when the dev split is empty).
TrainResult train(AmrnnModel model, const Dataset& dataset, const TrainConfig& cfg);

// Fraction of examples whose selected choice equals the answer; no dropout.
double evaluate(const AmrnnModel& model, const std::vector<Example>& examples);

struct TuneResult {
  int best_hops = 1;
  std::vector<std::pair<int, double>> dev_accuracy;  // (n_hops, accuracy) per candidate
};

// Trains one model per candidate hop count and picks the best dev accuracy,
// lowest hop count on ties.
TuneResult tune_hops(const std::function<AmrnnModel(int)>& model_factory, const Dataset& dataset,
                     const TrainConfig& cfg);

}  // namespace amrnn
