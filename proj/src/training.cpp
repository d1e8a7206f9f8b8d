#include "amrnn/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace amrnn {

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must be in [0, 1)");
  if (rms_decay < 0.0 || rms_decay >= 1.0) throw ConfigError("rms_decay must be in [0, 1)");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) throw ConfigError("dropout_rate must be in [0, 1)");
  if (epsilon <= 0.0) throw ConfigError("epsilon must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (max_epochs < 0) throw ConfigError("max_epochs must be >= 0");
  if (hop_search.empty()) throw ConfigError("hop_search must not be empty");
  for (int n : hop_search) {
    if (n < 1) throw ConfigError("hop_search entries must be >= 1");
  }
}

RmsPropState RmsPropState::init(const std::vector<Tensor*>& params) {
  RmsPropState state;
  state.slots.reserve(params.size());
  for (const Tensor* p : params) {
    state.slots.push_back({Tensor::zeros(p->shape), Tensor::zeros(p->shape)});
  }
  return state;
}

void rmsprop_update(RmsPropState& state, const std::vector<Tensor*>& params,
                    const std::vector<Tensor>& grads, const TrainConfig& cfg) {
  if (params.size() != state.slots.size() || params.size() != grads.size()) {
    throw ShapeError("rmsprop_update: " + std::to_string(params.size()) + " params, " +
                     std::to_string(grads.size()) + " grads, " +
                     std::to_string(state.slots.size()) + " state slots");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& theta = *params[k];
    const Tensor& g = grads[k];
    if (g.shape != theta.shape) {
      throw ShapeError("rmsprop_update: gradient shape " + shape_str(g.shape) +
                       " vs parameter shape " + shape_str(theta.shape));
    }
    Tensor& r = state.slots[k].r;
    Tensor& v = state.slots[k].v;
    for (std::size_t i = 0; i < theta.values.size(); ++i) {
      r.values[i] = cfg.rms_decay * r.values[i] + (1.0 - cfg.rms_decay) * g.values[i] * g.values[i];
      v.values[i] = cfg.momentum * v.values[i] -
                    cfg.learning_rate * g.values[i] / std::sqrt(r.values[i] + cfg.epsilon);
      theta.values[i] += v.values[i];
    }
  }
  ++state.step;
}

Tensor target_vector(int answer) {
  if (answer < 0 || answer > 3) {
    throw PreconditionError("target_vector: answer " + std::to_string(answer) + " out of range");
  }
  Tensor t = Tensor::zeros({4});
  t(answer) = 1.0;
  return t;
}

Tensor scores_loss(Tape& tape, const std::array<Tensor, 4>& scores, int answer,
                   bool cross_entropy) {
  const Tensor stacked = tape.stack({scores[0], scores[1], scores[2], scores[3]});
  if (cross_entropy) {
    const Tensor probs = tape.normalize_attention(stacked, std::vector<char>(4, 1));
    return tape.sub(tape.leaf(Tensor::scalar(0.0)), tape.log(tape.pick(probs, answer)));
  }
  const Tensor diff = tape.sub(stacked, tape.leaf(target_vector(answer)));
  return tape.sum(tape.mul(diff, diff));
}

namespace {

struct LossForward {
  Tensor loss;
  std::vector<Tensor> bound_params;  // tape leaves, in parameters() order
};

LossForward forward_loss(Tape& tape, const AmrnnModel& model, const Example& example,
                         const TrainConfig& cfg, LossMode mode, Rng* dropout_rng) {
  AmrnnModel::DropoutSpec dropout;
  if (mode == LossMode::train && cfg.dropout_rate > 0.0) {
    if (dropout_rng == nullptr) {
      throw PreconditionError("example_loss: train mode with dropout needs an rng");
    }
    dropout.rate = cfg.dropout_rate;
    dropout.rng = dropout_rng;
  }
  // forward() binds the parameters as its first tape leaves, in parameters()
  // order; rebuild those handles here for gradient lookup.
  const std::size_t first_leaf = tape.size();
  AmrnnModel::Forward fwd = model.forward(tape, example, dropout);

  LossForward out;
  out.loss = scores_loss(tape, fwd.scores, example.answer, cfg.cross_entropy);
  const auto params = model.parameters();
  out.bound_params.reserve(params.size());
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor handle = *params[k].second;
    handle.node = static_cast<int>(first_leaf + k);
    out.bound_params.push_back(std::move(handle));
  }
  return out;
}

}  // namespace

double example_loss(const AmrnnModel& model, const Example& example, const TrainConfig& cfg,
                    LossMode mode, Rng* dropout_rng) {
  Tape tape;
  return forward_loss(tape, model, example, cfg, mode, dropout_rng).loss.scalar_value();
}

ExampleGradients example_loss_gradients(const AmrnnModel& model, const Example& example,
                                        const TrainConfig& cfg, LossMode mode, Rng* dropout_rng) {
  Tape tape;
  const LossForward fwd = forward_loss(tape, model, example, cfg, mode, dropout_rng);
  tape.backward(fwd.loss);

  ExampleGradients out;
  out.loss = fwd.loss.scalar_value();
  out.grads.reserve(fwd.bound_params.size());
  for (const Tensor& p : fwd.bound_params) out.grads.push_back(tape.grad(p));
  return out;
}

double evaluate(const AmrnnModel& model, const std::vector<Example>& examples) {
  if (examples.empty()) throw PreconditionError("evaluate: empty example list");
  int correct = 0;
  Tape tape;
  for (const Example& ex : examples) {
    tape.reset();
    if (model.forward(tape, ex).chosen == ex.answer) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

TrainResult train(AmrnnModel model, const Dataset& dataset, const TrainConfig& cfg) {
  cfg.validate();
  if (dataset.train.empty()) throw ConfigError("train: empty train split");

  auto params = model.parameters();
  std::vector<Tensor*> param_tensors;
  param_tensors.reserve(params.size());
  for (auto& [name, t] : params) param_tensors.push_back(t);

  RmsPropState opt_state = RmsPropState::init(param_tensors);
  Rng shuffle_rng(mix_seed(cfg.seed, 1));
  Rng dropout_rng(mix_seed(cfg.seed, 2));

  TrainResult result;
  result.model = model;
  double best_dev = -1.0;

  std::vector<std::size_t> order(dataset.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<Tensor> grad_sum;
  grad_sum.reserve(param_tensors.size());
  for (const Tensor* p : param_tensors) grad_sum.push_back(Tensor::zeros(p->shape));

  Tape tape;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      for (Tensor& g : grad_sum) std::fill(g.values.begin(), g.values.end(), 0.0);

      for (std::size_t i = start; i < end; ++i) {
        tape.reset();
        const LossForward fwd = forward_loss(tape, model, dataset.train[order[i]], cfg,
                                             LossMode::train, &dropout_rng);
        loss_sum += fwd.loss.scalar_value();
        tape.backward(fwd.loss);
        for (std::size_t k = 0; k < param_tensors.size(); ++k) {
          const Tensor g = tape.grad(fwd.bound_params[k]);
          for (std::size_t j = 0; j < g.values.size(); ++j) grad_sum[k].values[j] += g.values[j];
        }
      }

      const double inv_batch = 1.0 / static_cast<double>(end - start);
      for (Tensor& g : grad_sum) {
        for (double& v : g.values) v *= inv_batch;
      }
      rmsprop_update(opt_state, param_tensors, grad_sum, cfg);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_train_loss = loss_sum / static_cast<double>(order.size());
    stats.dev_accuracy = dataset.dev.empty() ? 0.0 : evaluate(model, dataset.dev);
    result.history.push_back(stats);

    if (dataset.dev.empty() || stats.dev_accuracy > best_dev) {
      best_dev = stats.dev_accuracy;
      result.model = model;
    }
  }
  return result;
}

TuneResult tune_hops(const std::function<AmrnnModel(int)>& model_factory, const Dataset& dataset,
                     const TrainConfig& cfg) {
  cfg.validate();
  if (dataset.dev.empty()) throw ConfigError("tune_hops: empty dev split");

  std::vector<int> candidates = cfg.hop_search;
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  TuneResult result;
  double best = -1.0;
  for (int n : candidates) {
    AmrnnModel candidate = model_factory(n);
    candidate.hops.n_hops = n;
    const TrainResult trained = train(std::move(candidate), dataset, cfg);
    const double acc = evaluate(trained.model, dataset.dev);
    result.dev_accuracy.emplace_back(n, acc);
    if (acc > best) {
      best = acc;
      result.best_hops = n;
    }
  }
  return result;
}

}  // namespace amrnn
