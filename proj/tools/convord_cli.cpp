#include "convord/cli.hpp"
#include "convord/parallel.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <sstream>

namespace {

std::vector<std::string> split_formats(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convex ordering experiments for truncated Euler schemes"};
  app.set_version_flag("--version", convord::git_describe());

  std::string command;
  std::string config_path;
  std::string threshold;
  std::string formats;
  convord::Overrides overrides;
  app.add_option("command", command, "constants | simulate | compare | propagate | converge | counterexample")
      ->required()
      ->check(CLI::IsMember(convord::command_ids()));
  app.add_option("--config", config_path, "YAML config file")->required();
  app.add_option("--seed", overrides.seed, "RNG seed");
  app.add_option("--paths", overrides.paths, "Monte Carlo paths N");
  app.add_option("--steps", overrides.steps, "time steps m");
  app.add_option("--threshold", threshold, "truncation level: auto or a number");
  app.add_flag("--override-hypotheses", overrides.override_hypotheses, "run even when hypotheses fail");
  app.add_option("--out", overrides.out, "output directory");
  app.add_option("--format", formats, "comma-separated report formats (json,csv)");
  app.footer(std::string("Worker threads default to $") + convord::kThreadsEnvVar + ".");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : convord::kExitError;
  }
  if (!threshold.empty()) overrides.threshold = threshold;
  if (!formats.empty()) overrides.formats = split_formats(formats);

  convord::ExperimentConfig config;
  try {
    config = convord::load_config(config_path);
    convord::apply_overrides(config, overrides);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return convord::kExitError;
  }
  return convord::run(convord::parse_command(command), config, std::cout, std::cerr);
}
