#include "peakcast/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "peakcast/kernels.hpp"

namespace peakcast::trainer {

namespace {
constexpr std::size_t kMaxHalvings = 8;
}  // namespace

void TrainConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw Error(ErrorKind::InvalidParameter, "lr must be >= 0");
  if (epochs == 0) throw Error(ErrorKind::InvalidParameter, "epochs must be positive");
  if (batch_size == 0) throw Error(ErrorKind::InvalidParameter, "batch size must be positive");
  if (!(lambda >= 0.0)) throw Error(ErrorKind::InvalidParameter, "lambda must be >= 0");
  if (!(p_drop >= 0.0 && p_drop < 1.0)) throw Error(ErrorKind::InvalidProbability, "dropout must lie in [0, 1)");
  if (!(val_fraction >= 0.0 && val_fraction <= 0.5)) {
    throw Error(ErrorKind::InvalidParameter, "val_fraction must lie in [0, 0.5]");
  }
}

double default_lr(Objective objective) { return objective == Objective::gpd_nll ? 0.005 : 0.01; }

std::pair<data::SupervisedSet, data::SupervisedSet> train_val_split(const data::SupervisedSet& ds, double val_fraction) {
  if (!(val_fraction >= 0.0 && val_fraction <= 0.5)) {
    throw Error(ErrorKind::InvalidParameter, "val_fraction must lie in [0, 0.5]");
  }
  const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(ds.size()) * val_fraction + 1e-9));
  const std::size_t n_train = ds.size() - n_val;
  return {ds.slice(0, n_train), ds.slice(n_train, ds.size())};
}

double sgd_step(Network& net, const data::SupervisedSet& ds, std::span<const std::size_t> rows, const LossSpec& spec,
                double lr, double lambda, std::span<const double> masks) {
  std::span<double> params = parameters(net);
  const auto mask = weight_mask(net);
  auto g = kernels::batch_gradient(net, params, ds, rows, spec, masks);
  if (lambda > 0.0) {
    for (std::size_t j = 0; j < params.size(); ++j) {
      if (mask[j]) g.grad[j] += 2.0 * lambda * params[j];
    }
  }
  for (std::size_t j = 0; j < params.size(); ++j) params[j] -= lr * g.grad[j];
  return g.loss;
}

TrainReport sgd_train(Network& net, const data::SupervisedSet& ds, const LossSpec& spec, const TrainConfig& cfg,
                      const EpochCallback& on_epoch) {
  cfg.validate();
  if (ds.empty()) throw Error(ErrorKind::EmptyDataset, "training set is empty");
  if (spec.objective == Objective::gpd_nll) {
    for (double y : ds.targets) {
      if (!(y > spec.threshold)) throw Error(ErrorKind::InvalidParameter, "gpd_nll training targets must exceed u");
    }
  }
  const auto [train, val] = train_val_split(ds, cfg.val_fraction);
  if (train.empty()) throw Error(ErrorKind::EmptyDataset, "training split is empty");

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> masks;

  TrainReport report;
  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  report.best_params.assign(parameters(net).begin(), parameters(net).end());

  double lr = cfg.lr;
  std::vector<double> epoch_start;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double train_loss = 0.0;
    double val_loss = std::numeric_limits<double>::quiet_NaN();
    epoch_start.assign(parameters(net).begin(), parameters(net).end());
    const std::mt19937_64 rng_start = rng;
    const std::vector<std::size_t> order_start = order;
    for (std::size_t attempt = 0;; ++attempt) {
      try {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
          const std::size_t end = std::min(order.size(), start + cfg.batch_size);
          const std::span<const std::size_t> rows(order.data() + start, end - start);
          masks.clear();
          if (cfg.p_drop > 0.0) {
            for (std::size_t r = 0; r < rows.size(); ++r) {
              const auto m = nn::dropout_mask(cfg.p_drop, train.lags, rng);
              masks.insert(masks.end(), m.begin(), m.end());
            }
          }
          const double batch_loss = sgd_step(net, train, rows, spec, lr, cfg.lambda, masks);
          if (!std::isfinite(batch_loss)) throw Error(ErrorKind::NonFiniteValue, "batch loss");
        }
        for (double w : parameters(net)) {
          if (!std::isfinite(w)) throw Error(ErrorKind::NonFiniteValue, "weights");
        }
        train_loss = kernels::dataset_loss(net, parameters(net), train, spec);
        break;
      } catch (const Error& e) {
        // A GPD step can push xi below zero far enough that some excess leaves
        // the support. Replay the epoch from its start with half the step.
        if (e.kind() == ErrorKind::OutOfSupport && attempt < kMaxHalvings) {
          std::copy(epoch_start.begin(), epoch_start.end(), parameters(net).begin());
          rng = rng_start;
          order = order_start;
          lr *= 0.5;
          ++report.lr_halvings;
          continue;
        }
        if (e.kind() != ErrorKind::NonFiniteValue && e.kind() != ErrorKind::OutOfSupport) throw;
        throw Error(ErrorKind::DivergedLoss, "epoch " + std::to_string(epoch) + ": " + e.what());
      }
    }
    if (!val.empty()) {
      // A held-out excess outside the fitted support has zero likelihood:
      // the epoch scores +inf and is never selected, but training goes on.
      try {
        val_loss = kernels::dataset_loss(net, parameters(net), val, spec);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::OutOfSupport) throw;
        val_loss = std::numeric_limits<double>::infinity();
      }
    }
    if (!std::isfinite(train_loss) || (!val.empty() && std::isnan(val_loss))) {
      throw Error(ErrorKind::DivergedLoss, "epoch " + std::to_string(epoch) + ": non-finite loss");
    }
    report.train_loss.push_back(train_loss);
    report.val_loss.push_back(val_loss);
    if (on_epoch) on_epoch(epoch, train_loss, val_loss);

    const double score = val.empty() ? train_loss : val_loss;
    if (score < best || report.train_loss.size() == 1) {
      best = score;
      report.best_epoch = epoch;
      report.best_params.assign(parameters(net).begin(), parameters(net).end());
      since_best = 0;
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      report.stopped_early = true;
      break;
    }
  }
  std::copy(report.best_params.begin(), report.best_params.end(), parameters(net).begin());
  return report;
}

}  // namespace peakcast::trainer
