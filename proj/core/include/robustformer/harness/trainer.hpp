#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "robustformer/harness/datasets.hpp"
#include "robustformer/model.hpp"
#include "robustformer/optim.hpp"

namespace rf {

struct TrainSettings {
  std::size_t epochs = 1;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  double warmup_fraction = 0.05;
  AdamWConfig adam;
  std::uint64_t seed = 0;
};

struct StepRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
};

/// `step<TAB>epoch<TAB>lr<TAB>loss` with fixed formatting.
std::string format_step(const StepRecord& r);

using StepCallback = std::function<void(const StepRecord&)>;
using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

/// Minibatches follow a per-epoch shuffle drawn from the master seed; masks
/// come from a separate stream, so the loss sequence depends only on the
/// settings, the data and the initial weights. Throws TrainingError on a
/// non-finite loss.
std::vector<StepRecord> pretrain(MaeModel<float>& model, AdamWState<float>& opt, const Dataset& data,
                                 const TrainSettings& settings, const StepCallback& on_step = {});

std::vector<StepRecord> finetune(MaeModel<float>& model, AdamWState<float>& opt, const Dataset& data,
                                 const TrainSettings& settings, const StepCallback& on_step = {},
                                 const EpochCallback& on_epoch = {});

/// Top-k accuracy in percent over a dataset.
double accuracy(const MaeModel<float>& model, const Dataset& data, std::size_t batch_size = 64, std::size_t k = 1);

}  // namespace rf
