// Command-line front end: run, validate and summarise scenarios.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bamsdn/bamsdn.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitValidation = 2;
constexpr int kExitInvariant = 3;

int report(const char* kind, const std::exception& e, int code) {
  std::cerr << "bamsdn: " << kind << ": " << e.what() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bandwidth allocation model controller simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "./out";
  auto* run = app.add_subcommand("run", "Run a scenario and write metrics.csv, journal.tsv, summary.txt");
  run->add_option("scenario", scenario_path, "Scenario file")->required();
  run->add_option("--seed", seed, "Override the scenario's RNG seed");
  run->add_option("--out", out_dir, "Output directory")->capture_default_str();

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Parse and validate a scenario file");
  validate->add_option("scenario", validate_path, "Scenario file")->required();

  std::string journal_path;
  auto* summary = app.add_subcommand("summary", "Recompute the run summary from a journal");
  summary->add_option("journal", journal_path, "journal.tsv written by 'run'")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      bamsdn::ScenarioSpec spec = bamsdn::load(scenario_path);
      bamsdn::RunOptions opts;
      opts.seed = seed;
      bamsdn::RunResult res = bamsdn::run(spec, opts);
      bamsdn::write_outputs(res, spec.classes.size(), out_dir);
      std::cout << res.summary;
    } else if (*validate) {
      bamsdn::ScenarioSpec spec = bamsdn::load(validate_path);
      std::cout << "ok " << spec.name << ": " << spec.stop << " requests, " << spec.classes.size()
                << " classes, model " << bamsdn::to_string(spec.initial_bc.model) << ", "
                << spec.reconfigs.size() << " reconfiguration(s)\n";
    } else if (*summary) {
      std::ifstream in(journal_path);
      if (!in) throw bamsdn::IoError("cannot open '" + journal_path + "'");
      std::cout << bamsdn::summarize(bamsdn::read_journal(in));
    }
  } catch (const bamsdn::ParseError& e) {
    return report("parse error", e, kExitValidation);
  } catch (const bamsdn::ValidationError& e) {
    return report("invalid scenario", e, kExitValidation);
  } catch (const bamsdn::InvalidBc& e) {
    return report("invalid bandwidth constraints", e, kExitValidation);
  } catch (const bamsdn::IoError& e) {
    return report("i/o error", e, kExitFailure);
  } catch (const bamsdn::Error& e) {
    return report("internal invariant violated", e, kExitInvariant);
  }
  return kExitOk;
}
