// rf: command-line front end.
//
//   rf <command> --config <path> [--set key=value ...]

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "robustformer/harness/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Wavelet-domain masked autoencoder training and robustness evaluation"};
  app.require_subcommand(1);

  struct Args {
    std::string config;
    std::vector<std::string> sets;
  };
  const std::map<std::string, std::string> kDescriptions{
      {"pretrain", "masked-reconstruction pretraining; writes loss_log.tsv and checkpoint.rfck"},
      {"finetune", "classification finetuning; writes loss/accuracy logs and checkpoint.rfck"},
      {"evaluate", "clean, corrupted and sequence predictions; writes predictions.tsv"},
      {"corrupt", "writes corrupted copies of the test split"},
      {"metrics", "CE/mCE, FP/mFP and robustness tables from a prediction log"},
      {"dwt", "forward or inverse DWT of an RFTN tensor"},
      {"synth", "generates the synthetic digits or moving-shapes datasets"}};
  std::vector<Args> args(rf::command_names().size());
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < rf::command_names().size(); ++i) {
    const std::string& name = rf::command_names()[i];
    auto* sub = app.add_subcommand(name, kDescriptions.count(name) ? kDescriptions.at(name) : "");
    sub->add_option("--config", args[i].config, "key = value configuration file");
    sub->add_option("--set", args[i].sets, "override one setting as key=value")->allow_extra_args(false);
    subs.push_back(sub);
  }
  CLI11_PARSE(app, argc, argv);

  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    const std::string& name = rf::command_names()[i];
    rf::RunConfig cfg;
    try {
      if (!args[i].config.empty()) cfg = rf::RunConfig::load(args[i].config);
      for (const auto& s : args[i].sets) cfg.set(s);
    } catch (const std::exception& e) {
      std::cerr << "rf " << name << ": error: " << e.what() << "\n";
      return 2;
    }
    return rf::run_command(name, cfg, std::cout, std::cerr);
  }
  return 1;
}
