// Command-line front end: run built-in models, verify samplers, summarize
// trajectory files. Every flag can also be set through a CTDE_* environment
// variable (for example CTDE_SEED or CTDE_T_END); flags win over the
// environment, which wins over the config file.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "ctde/config.hpp"
#include "ctde/kernel.hpp"
#include "ctde/models.hpp"
#include "ctde/suites.hpp"

namespace fs = std::filesystem;
using namespace ctde;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kConfigError = 2;
constexpr int kStalled = 3;

std::string env_name(const std::string& flag) {
  std::string out = "CTDE_";
  for (char c : flag) out += c == '-' ? '_' : static_cast<char>(std::toupper(c));
  return out;
}

struct RunFlags {
  std::string config;
  std::string model;
  std::vector<std::string> params;
  std::string sampler;
  std::string partition;
  std::uint64_t seed = 0;
  std::size_t trajectories = 0;
  double t_end = 0.0;
  std::uint64_t max_events = 0;
  bool until_stalled = false;
  std::string output;
  unsigned workers = 0;
  std::map<std::string, CLI::Option*> options;

  bool given(const std::string& name) const { return options.at(name)->count() > 0; }
};

RunSpec resolve(const RunFlags& f) {
  RunSpec spec;
  if (!f.config.empty()) {
    spec = load_run_spec(f.config);
  } else if (!f.given("model")) {
    throw ConfigError("model", "give --model or --config");
  }
  if (f.given("model")) {
    if (f.model != spec.model) spec.params.clear();
    spec.model = f.model;
  }
  for (const auto& item : f.params) {
    auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--param", "expected key=value, got '" + item + "'");
    spec.params[item.substr(0, eq)] = item.substr(eq + 1);
  }
  if (f.given("sampler")) spec.sampler.name = f.sampler;
  if (f.given("partition")) {
    try {
      spec.sampler.partition = parse_partition(f.partition);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("--partition", e.what());
    }
  }
  if (f.given("seed")) spec.seed = f.seed;
  if (f.given("trajectories")) spec.trajectories = f.trajectories;
  if (f.given("t-end")) spec.stop = EndTime{f.t_end};
  if (f.given("max-events")) spec.stop = EventCount{f.max_events};
  if (f.given("until-stalled")) spec.stop = StalledOnly{};
  if (f.given("output")) spec.output = f.output;
  if (f.given("workers")) spec.workers = f.workers;
  validate(spec);
  return spec;
}

std::string stop_text(const StopCondition& stop) {
  if (const auto* e = std::get_if<EndTime>(&stop)) return "t_end=" + format_time(e->t);
  if (const auto* c = std::get_if<EventCount>(&stop)) return "max_events=" + std::to_string(c->n);
  return "stalled";
}

std::string file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "traj_%05zu.tsv", index);
  return buf;
}

int cmd_run(const RunFlags& flags) {
  RunSpec spec;
  Model model = build_model("poisson");
  try {
    spec = resolve(flags);
    model = build_model(spec.model, spec.params);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  const auto started = std::chrono::steady_clock::now();
  std::vector<Trajectory> runs = run_ensemble(model, spec.sampler, spec.seed, spec.trajectories,
                                              spec.stop, spec.workers);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  fs::create_directories(spec.output);
  bool stalled_early = false;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::ofstream out(fs::path(spec.output) / file_name(i));
    write_trajectory(out, runs[i]);
    if (std::holds_alternative<EventCount>(spec.stop) && runs[i].events.empty() &&
        runs[i].stop_reason == StopReason::Stalled) {
      stalled_early = true;
    }
  }
  std::ofstream manifest(fs::path(spec.output) / "manifest.tsv");
  manifest << "# model\t" << model.name() << '\n';
  manifest << "# model_hash\t" << model.hash() << '\n';
  for (const auto& [k, v] : model.params()) manifest << "# param\t" << k << '\t' << v << '\n';
  manifest << "# sampler\t" << format_sampler(spec.sampler) << '\n';
  manifest << "# base_seed\t" << spec.seed << '\n';
  manifest << "# stop\t" << stop_text(spec.stop) << '\n';
  manifest << "# wall_time_seconds\t" << wall << '\n';
  manifest << "index\tfile\tseed\tevents\tfinal_time\tstop_reason\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    manifest << i << '\t' << file_name(i) << '\t' << runs[i].rng_seed << '\t' << runs[i].events.size()
             << '\t' << format_time(runs[i].final_time) << '\t' << to_string(runs[i].stop_reason) << '\n';
  }
  std::cout << "wrote " << runs.size() << " trajectories to " << spec.output << '\n';
  if (stalled_early) {
    std::cerr << "stalled before any event while an event count was required\n";
    return kStalled;
  }
  return kOk;
}

int cmd_verify(const std::string& suite, const SuiteOptions& options) {
  const auto& names = suite_names();
  if (std::find(names.begin(), names.end(), suite) == names.end()) {
    std::cerr << "unknown suite '" << suite << "'; valid suites: distributions, sampler-equivalence, oracle, all\n";
    return kConfigError;
  }
  auto results = run_suite(suite, options);
  std::cout << "suite\tcheck\tresult\tmeasured\tp_value\n";
  bool all = true;
  for (const auto& r : results) {
    all = all && r.passed;
    std::cout << r.suite << '\t' << r.check << '\t' << (r.passed ? "PASS" : "FAIL") << '\t' << r.measured
              << '\t';
    if (r.p_value >= 0.0) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.4g", r.p_value);
      std::cout << buf;
    } else {
      std::cout << '-';
    }
    std::cout << '\n';
  }
  return all ? kOk : kFailure;
}

std::vector<fs::path> expand(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& input : inputs) {
    fs::path p(input);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(p)) {
        auto name = entry.path().filename().string();
        if (name.rfind("traj_", 0) == 0 && entry.path().extension() == ".tsv") found.push_back(entry.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(p);
    }
  }
  return files;
}

int cmd_summarize(const std::vector<std::string>& inputs, const std::string& observable,
                  const std::string& key) {
  const auto files = expand(inputs);
  if (files.empty()) {
    std::cerr << "no trajectory files given\n";
    return kConfigError;
  }
  std::vector<Trajectory> runs;
  for (const auto& file : files) {
    std::ifstream in(file);
    if (!in) {
      std::cerr << file.string() << ": cannot open\n";
      return kConfigError;
    }
    try {
      runs.push_back(read_trajectory(in));
    } catch (const TrajectoryFormatError& e) {
      std::cerr << file.string() << ": " << e.what() << '\n';
      return kConfigError;
    }
  }
  if (observable == "event-count") {
    std::cout << "file\tevents\tfinal_time\n";
    for (std::size_t i = 0; i < runs.size(); ++i) {
      std::cout << files[i].filename().string() << '\t' << runs[i].events.size() << '\t'
                << format_time(runs[i].final_time) << '\n';
    }
  } else if (observable == "interarrival") {
    std::cout << "file\tseq\tinterarrival\n";
    for (std::size_t i = 0; i < runs.size(); ++i) {
      double last = 0.0;
      for (const auto& e : runs[i].events) {
        std::cout << files[i].filename().string() << '\t' << e.seq << '\t' << format_time(e.time - last) << '\n';
        last = e.time;
      }
    }
  } else {
    std::map<std::string, std::size_t> histogram;
    std::map<std::int64_t, std::size_t> counts;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      try {
        Model model = build_model(runs[i].model_name, runs[i].params);
        if (model.hash() != runs[i].model_hash) {
          std::cerr << files[i].string() << ": model hash does not match this version's " << runs[i].model_name
                    << '\n';
          return kConfigError;
        }
        SystemState final_state = aggregate_by_prefix(replay(model, runs[i]).back());
        if (key.empty()) {
          ++histogram[final_state.to_string()];
        } else {
          ++counts[final_state.count(key)];
        }
      } catch (const std::exception& e) {
        std::cerr << files[i].string() << ": " << e.what() << '\n';
        return kConfigError;
      }
    }
    std::cout << (key.empty() ? "final_state" : key) << "\tcount\n";
    for (const auto& [label, count] : histogram) std::cout << label << '\t' << count << '\n';
    for (const auto& [value, count] : counts) std::cout << value << '\t' << count << '\n';
  }
  return kOk;
}

int cmd_models() {
  for (const auto& info : model_catalog()) {
    std::cout << info.name << "\t" << info.description << '\n';
    for (const auto& p : info.params) {
      std::cout << "  " << p.name << " (default " << p.default_value << ")\t" << p.description << '\n';
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Competing-clocks discrete-event simulation"};
  app.require_subcommand(1);

  RunFlags run;
  auto* run_cmd = app.add_subcommand("run", "simulate a model and write trajectory files");
  auto add = [&](const std::string& name, auto& target, const std::string& help) {
    auto* opt = run_cmd->add_option("--" + name, target, help)->envname(env_name(name));
    run.options[name] = opt;
    return opt;
  };
  add("config", run.config, "YAML run configuration");
  add("model", run.model, "built-in model name (see `ctde models`)");
  run.options["param"] =
      run_cmd->add_option("--param", run.params, "model parameter key=value (repeatable)")->envname("CTDE_PARAM");
  add("sampler", run.sampler, "first-reaction | next-reaction | next-to-fire | direct | hierarchical");
  add("partition", run.partition, "hierarchical partition, e.g. Exponential=direct,default=next-reaction");
  add("seed", run.seed, "base seed");
  add("trajectories", run.trajectories, "number of trajectories");
  auto* t_end = add("t-end", run.t_end, "stop at this time");
  auto* max_events = add("max-events", run.max_events, "stop after this many events");
  run.options["until-stalled"] =
      run_cmd->add_flag("--until-stalled", run.until_stalled, "run until no clock can fire")
          ->envname("CTDE_UNTIL_STALLED");
  t_end->excludes(max_events);
  run.options["until-stalled"]->excludes(t_end)->excludes(max_events);
  add("output", run.output, "output directory");
  add("workers", run.workers, "worker threads");

  std::string suite;
  SuiteOptions suite_options;
  auto* verify_cmd = app.add_subcommand("verify", "run statistical verification suites");
  verify_cmd->add_option("suite", suite, "distributions | sampler-equivalence | oracle | all")->required();
  verify_cmd->add_option("--seed", suite_options.seed, "seed")->envname("CTDE_SEED");
  verify_cmd->add_option("--samples", suite_options.samples, "samples per comparison")->envname("CTDE_SAMPLES");

  std::vector<std::string> inputs;
  std::string observable = "event-count";
  std::string key;
  auto* summarize_cmd = app.add_subcommand("summarize", "tabulate observables from trajectory files");
  summarize_cmd->add_option("files", inputs, "trajectory files or run directories");
  summarize_cmd->add_option("--observable", observable, "event-count | final-state | interarrival")
      ->check(CLI::IsMember({"event-count", "final-state", "interarrival"}))
      ->envname("CTDE_OBSERVABLE");
  summarize_cmd->add_option("--key", key, "final-state: histogram this aggregated substate only");

  auto* models_cmd = app.add_subcommand("models", "list built-in models and parameters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(run);
    if (verify_cmd->parsed()) return cmd_verify(suite, suite_options);
    if (summarize_cmd->parsed()) return cmd_summarize(inputs, observable, key);
    if (models_cmd->parsed()) return cmd_models();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
