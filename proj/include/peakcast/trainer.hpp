#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "peakcast/data.hpp"
#include "peakcast/model.hpp"

namespace peakcast::trainer {

struct TrainConfig {
  double lr = 0.01;
  std::size_t epochs = 500;
  std::size_t batch_size = 32;
  double lambda = 0.0;
  double p_drop = 0.0;
  std::uint64_t seed = 0;
  double val_fraction = 0.0;
  std::size_t patience = 0;  // 0 disables early abort

  void validate() const;
};

/// Default step size per objective: 0.01 for mse, 0.005 for gpd_nll.
double default_lr(Objective objective);

struct TrainReport {
  std::vector<double> train_loss;  // mean data loss on the training split after each epoch
  std::vector<double> val_loss;    // same on the validation split; empty split gives NaN
  std::size_t best_epoch = 0;
  std::vector<double> best_params;
  bool stopped_early = false;
  std::size_t lr_halvings = 0;  // epochs replayed at half step after leaving the GPD support
};

/// Chronological split: the last floor(n * val_fraction) rows form the validation set.
std::pair<data::SupervisedSet, data::SupervisedSet> train_val_split(const data::SupervisedSet& ds, double val_fraction);

using EpochCallback = std::function<void(std::size_t epoch, double train_loss, double val_loss)>;

/// Plain minibatch SGD on mean data loss + lambda * sum(w^2). Minibatches come
/// from a seeded shuffle of the training split each epoch; dropout masks the
/// inputs of training batches only. On return the network holds the snapshot
/// with the lowest validation loss (training loss when there is no validation
/// split). An epoch whose steps carry a GPD excess outside the support is
/// replayed from its start with the step size halved (at most 8 times);
/// after that, or on any non-finite value, DivergedLoss is raised.
TrainReport sgd_train(Network& net, const data::SupervisedSet& ds, const LossSpec& spec, const TrainConfig& cfg,
                      const EpochCallback& on_epoch = {});

/// One SGD step on the given rows; returns the pre-step batch loss.
double sgd_step(Network& net, const data::SupervisedSet& ds, std::span<const std::size_t> rows, const LossSpec& spec,
                double lr, double lambda, std::span<const double> masks = {});

}  // namespace peakcast::trainer
