#include <iostream>

#include "CLI11.hpp"
#include "gcr/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Multi-objective PPO with gradient-conflict resolution"};
  app.require_subcommand(1);

  gcr::TrainOptions train;
  std::string train_config;
  std::string train_algo;
  std::uint64_t train_seed = 0;
  auto* t = app.add_subcommand("train", "Train one agent and write metrics, checkpoint and config");
  auto* t_config = t->add_option("--config", train_config, "Run config file")->check(CLI::ExistingFile);
  auto* t_algo = t->add_option("--algo", train_algo, "ppo, multihead, gcr-noprio or gcr");
  auto* t_seed = t->add_option("--seed", train_seed, "Run seed");
  t->add_option("--out", train.out, "Output directory")->required();

  gcr::CompareOptions compare;
  std::string compare_config;
  auto* c = app.add_subcommand("compare", "Paired multi-seed comparison of algorithms");
  auto* c_config = c->add_option("--config", compare_config, "Run config file")->check(CLI::ExistingFile);
  c->add_option("--algos", compare.algos, "Algorithms; the first is the reference")
      ->delimiter(',')
      ->required();
  c->add_option("--seeds", compare.seeds, "Seeds per algorithm");
  c->add_option("--out", compare.out, "Output directory")->required();

  gcr::BandsOptions bands;
  std::string bands_config;
  auto* b = app.add_subcommand("bands", "Sample band-objective task configurations");
  auto* b_config = b->add_option("--config", bands_config, "Base run config")->check(CLI::ExistingFile);
  b->add_option("--task", bands.task, "Environment with band objectives")->required();
  b->add_option("--n-objectives", bands.n_objectives, "Band objectives per task")->required();
  b->add_option("--n-samples", bands.n_samples, "Number of task configurations")->required();
  b->add_option("--seed", bands.seed, "Sampling seed");
  b->add_option("--out", bands.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? gcr::kExitOk : gcr::kExitUsage;
  }

  try {
    if (t->parsed()) {
      if (*t_config) train.config = train_config;
      if (*t_algo) train.algo = train_algo;
      if (*t_seed) train.seed = train_seed;
      return gcr::run_train(train, std::cout, std::cerr);
    }
    if (c->parsed()) {
      if (*c_config) compare.config = compare_config;
      return gcr::run_compare(compare, std::cout, std::cerr);
    }
    if (*b_config) bands.config = bands_config;
    return gcr::run_bands(bands, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return gcr::kExitUsage;
  }
}
