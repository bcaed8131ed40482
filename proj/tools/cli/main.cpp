#include <cstdlib>
#include <iostream>
#include <stdexcept>

#include <CLI11.hpp>

#include <gram/errors.hpp>

#include "commands.hpp"
#include "errors.hpp"

namespace {

constexpr const char* kExitCodes =
    "Exit codes: 0 ok, 1 usage or I/O error, 2 embedding parse error, 3 missing id,\n"
    "4 unknown anchor, 5 config error, 6 training diverged.";

}  // namespace

int main(int argc, char** argv) {
  using namespace gram::cli;

  CLI::App app{"Gramian volume similarity, contrastive training and evaluation."};
  app.footer(kExitCodes);
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions options;
  std::uint64_t seed = 0;
  std::string out_path;
  app.add_option("--seed", seed, "Override the config seed (train)");
  app.add_flag("--normalize,!--no-normalize", options.normalize, "Normalize embeddings before use (default on)");
  app.add_option("--out", out_path, "Output file; for train, the output directory");

  std::vector<std::filesystem::path> paths;
  std::vector<std::string> ids;
  std::string anchor;
  std::vector<int> ks{1, 5, 10};
  std::filesystem::path config;

  auto* volume = app.add_subcommand("volume", "Gramian volume of every id's tuple across the input modalities");
  volume->add_option("files", paths, "Embedding files")->required()->check(CLI::ExistingFile);
  volume->add_option("--ids", ids, "Only these ids, in this order")->delimiter(',');

  auto* simmat = app.add_subcommand("simmat", "B x B cross-volume matrix as CSV");
  simmat->add_option("files", paths, "Embedding files")->required()->check(CLI::ExistingFile);
  simmat->add_option("--anchor", anchor, "Anchor modality name")->required();

  auto* train = app.add_subcommand("train", "Train on synthetic data from a key=value config");
  train->add_option("config", config, "Config file")->required();

  auto* eval = app.add_subcommand("eval", "Recall@K of volume retrieval as JSON");
  eval->add_option("files", paths, "Embedding files")->required()->check(CLI::ExistingFile);
  eval->add_option("--anchor", anchor, "Anchor modality name")->required();
  eval->add_option("--ks", ks, "Recall cutoffs")->delimiter(',');

  auto* metric = app.add_subcommand("metric", "Mean matched-tuple volume as JSON");
  metric->add_option("files", paths, "Embedding files")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  if (app.count("--seed") > 0) options.seed = seed;
  if (!out_path.empty()) options.out = out_path;

  try {
    if (volume->parsed()) cmd_volume(paths, ids, options, std::cout);
    if (simmat->parsed()) cmd_simmat(paths, anchor, options, std::cout);
    if (train->parsed()) cmd_train(config, options, std::cout);
    if (eval->parsed()) cmd_eval(paths, anchor, ks, options, std::cout);
    if (metric->parsed()) cmd_metric(paths, options, std::cout);
  } catch (const CliError& e) {
    std::cerr << "gram: " << e.what() << '\n';
    return e.code();
  } catch (const gram::Error& e) {
    std::cerr << "gram: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "gram: unexpected error: " << e.what() << '\n';
    return kUsage;
  }
  std::cout.flush();
  return std::cout ? kOk : kUsage;
}
