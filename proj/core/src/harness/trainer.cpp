#include "robustformer/harness/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace rf {

std::string format_step(const StepRecord& r) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%zu\t%zu\t%.9g\t%.9g", r.step, r.epoch, r.lr, r.loss);
  return buf;
}

namespace {

using LossFn = std::function<float(const Tensor<float>&, const std::vector<int>&, std::size_t step,
                                   ModelWeights<float>& grads)>;

std::vector<StepRecord> train_loop(MaeModel<float>& model, AdamWState<float>& opt, const Dataset& data,
                                   const TrainSettings& s, const char* phase, const LossFn& loss_fn,
                                   const StepCallback& on_step, const EpochCallback& on_epoch) {
  if (data.size() == 0) throw DataError(std::string(phase) + ": empty training set");
  if (s.batch_size == 0) throw ConfigError(std::string(phase) + ": batch size must be positive");
  const std::size_t per_epoch = (data.size() + s.batch_size - 1) / s.batch_size;
  LrSchedule schedule;
  schedule.base_lr = s.lr;
  schedule.total_steps = std::max<std::size_t>(1, per_epoch * s.epochs);
  schedule.warmup_steps = static_cast<std::size_t>(std::floor(s.warmup_fraction * static_cast<double>(schedule.total_steps)));

  const Rng shuffle_root(s.seed, std::string(phase) + "/shuffle");
  std::vector<StepRecord> records;
  ModelWeights<float> grads = zeros_like(model.weights());
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < s.epochs; ++epoch) {
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle = shuffle_root.fork(std::to_string(epoch));
    shuffle.shuffle(order.begin(), order.end());
    double epoch_loss = 0;
    for (std::size_t b = 0; b < per_epoch; ++b, ++step) {
      const std::size_t begin = b * s.batch_size, end = std::min(begin + s.batch_size, data.size());
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      for (auto& p : grads.parameters()) p.second->fill(0.0f);
      const float loss = loss_fn(data.batch(idx), data.batch_labels(idx), step, grads);
      if (!std::isfinite(loss)) {
        throw TrainingError(std::string(phase) + ": non-finite loss at step " + std::to_string(step) + " (epoch " +
                            std::to_string(epoch) + ", batch " + std::to_string(b) + ", lr " +
                            std::to_string(schedule.at(step)) + ")");
      }
      const double lr = schedule.at(step);
      adamw_step(model.weights(), grads, opt, lr, s.adam);
      const StepRecord rec{step, epoch, lr, static_cast<double>(loss)};
      records.push_back(rec);
      epoch_loss += loss;
      if (on_step) on_step(rec);
    }
    if (on_epoch) on_epoch(epoch, epoch_loss / static_cast<double>(per_epoch));
  }
  return records;
}

}  // namespace

std::vector<StepRecord> pretrain(MaeModel<float>& model, AdamWState<float>& opt, const Dataset& data,
                                 const TrainSettings& settings, const StepCallback& on_step) {
  const Rng mask_root(settings.seed, "pretrain/mask");
  return train_loop(
      model, opt, data, settings, "pretrain",
      [&](const Tensor<float>& x, const std::vector<int>&, std::size_t step, ModelWeights<float>& grads) {
        Rng masks = mask_root.fork(std::to_string(step));
        return model.pretrain_loss(x, masks, &grads);
      },
      on_step, {});
}

std::vector<StepRecord> finetune(MaeModel<float>& model, AdamWState<float>& opt, const Dataset& data,
                                 const TrainSettings& settings, const StepCallback& on_step,
                                 const EpochCallback& on_epoch) {
  return train_loop(
      model, opt, data, settings, "finetune",
      [&](const Tensor<float>& x, const std::vector<int>& labels, std::size_t, ModelWeights<float>& grads) {
        return model.finetune_loss(x, labels, &grads);
      },
      on_step, on_epoch);
}

double accuracy(const MaeModel<float>& model, const Dataset& data, std::size_t batch_size, std::size_t k) {
  if (data.size() == 0) throw DataError("accuracy: empty dataset");
  std::size_t hits = 0;
  for (std::size_t begin = 0; begin < data.size(); begin += batch_size) {
    std::vector<std::size_t> idx;
    for (std::size_t i = begin; i < std::min(begin + batch_size, data.size()); ++i) idx.push_back(i);
    const Tensor<float> logits = model.logits(data.batch(idx));
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const auto row = logits.row(r);
      const float target = row[static_cast<std::size_t>(data.labels[idx[r]])];
      // Rank with ties resolved towards the lower index, as in argmax.
      std::size_t better = 0;
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (row[c] > target || (row[c] == target && c < static_cast<std::size_t>(data.labels[idx[r]]))) ++better;
      }
      hits += better < k;
    }
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace rf
