#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "gazelab/commands.hpp"

using gazelab::io::Config;

int main(int argc, char** argv) {
  CLI::App app{"gazelab: encoder/decoder gaze prediction laboratory"};
  app.require_subcommand(1);

  std::string config_path, checkpoint_path, out_dir;
  double threshold = 0.9;
  std::uint64_t seed = 0;

  auto* train_cmd =
      app.add_subcommand("train", "train a model on a dataset directory");
  auto* eval_cmd =
      app.add_subcommand("eval", "score a checkpoint against a dataset");
  auto* dissect_cmd = app.add_subcommand(
      "dissect", "rank units by NSS and dissect the detectors");
  auto* synth_cmd =
      app.add_subcommand("synth", "generate a synthetic gaze dataset");

  CLI::Option* threshold_opt = nullptr;
  CLI::Option* seed_opts[4] = {};
  std::size_t sub_index = 0;
  for (CLI::App* sub : {train_cmd, eval_cmd, dissect_cmd, synth_cmd}) {
    CLI::Option* cfg_opt = sub->add_option(
        "--config", config_path, "INI-style key=value configuration file");
    if (sub != synth_cmd) cfg_opt->required();
    sub->add_option("--out", out_dir, "output directory")->required();
    seed_opts[sub_index++] =
        sub->add_option("--seed", seed, "override the config seed");
  }
  for (CLI::App* sub : {eval_cmd, dissect_cmd})
    sub->add_option("--checkpoint", checkpoint_path, "model checkpoint file")
        ->required();
  threshold_opt = dissect_cmd->add_option(
      "--threshold", threshold, "positive-detector cutoff (default 0.9)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  return gazelab::cmd::dispatch(
      [&] {
        Config cfg;
        if (!config_path.empty()) cfg = gazelab::io::read_config(config_path);
        bool seed_given = false;
        for (CLI::Option* opt : seed_opts)
          if (opt != nullptr && opt->count() > 0) seed_given = true;
        if (seed_given) cfg["seed"] = std::to_string(seed);
        if (threshold_opt->count() > 0) {
          char buf[32];
          std::snprintf(buf, sizeof(buf), "%.10g", threshold);
          cfg["detector_threshold"] = buf;
        }

        if (train_cmd->parsed()) {
          gazelab::cmd::train(cfg, out_dir);
        } else if (eval_cmd->parsed()) {
          gazelab::cmd::eval(cfg, checkpoint_path, out_dir);
        } else if (dissect_cmd->parsed()) {
          gazelab::cmd::dissect(cfg, checkpoint_path, out_dir);
        } else {
          gazelab::cmd::synth(cfg, out_dir);
        }
      },
      std::cerr);
}
