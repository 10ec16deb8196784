#include "ctde/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace ctde {

namespace {

std::string where(const std::string& field, const YAML::Node& node) {
  const auto mark = node.Mark();
  if (mark.line < 0) return field;
  return field + " (line " + std::to_string(mark.line + 1) + ")";
}

template <class T>
T scalar(const YAML::Node& node, const std::string& field) {
  if (!node.IsScalar()) throw ConfigError(where(field, node), "expected a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(where(field, node), "cannot read '" + node.Scalar() + "'");
  }
}

std::map<std::string, std::string> string_map(const YAML::Node& node, const std::string& field) {
  if (!node.IsMap()) throw ConfigError(where(field, node), "expected a mapping");
  std::map<std::string, std::string> out;
  for (const auto& item : node) {
    auto key = scalar<std::string>(item.first, field);
    out[key] = scalar<std::string>(item.second, field + "." + key);
  }
  return out;
}

void only_keys(const YAML::Node& node, const std::string& field,
               std::initializer_list<std::string_view> keys) {
  for (const auto& item : node) {
    auto key = item.first.Scalar();
    bool known = false;
    for (auto k : keys) known = known || k == key;
    if (!known) {
      throw ConfigError(where(field.empty() ? key : field + "." + key, item.first), "unknown key");
    }
  }
}

}  // namespace

RunSpec parse_run_spec(const std::string& yaml) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("line " + std::to_string(e.mark.line + 1), e.msg);
  }
  if (!root.IsMap()) throw ConfigError("", "configuration must be a mapping");
  only_keys(root, "",
            {"model", "sampler", "seed", "trajectories", "stop", "output", "workers"});
  RunSpec spec;
  const YAML::Node model = root["model"];
  if (!model) throw ConfigError("model", "missing");
  if (model.IsScalar()) {
    spec.model = model.Scalar();
  } else {
    if (!model.IsMap()) throw ConfigError(where("model", model), "expected a name or a mapping");
    only_keys(model, "model", {"name", "params"});
    if (!model["name"]) throw ConfigError(where("model.name", model), "missing");
    spec.model = scalar<std::string>(model["name"], "model.name");
    if (model["params"]) spec.params = string_map(model["params"], "model.params");
  }
  if (const YAML::Node sampler = root["sampler"]) {
    if (sampler.IsScalar()) {
      spec.sampler.name = sampler.Scalar();
    } else {
      if (!sampler.IsMap()) throw ConfigError(where("sampler", sampler), "expected a name or a mapping");
      only_keys(sampler, "sampler", {"name", "partition"});
      if (sampler["name"]) spec.sampler.name = scalar<std::string>(sampler["name"], "sampler.name");
      if (sampler["partition"]) {
        spec.sampler.partition = string_map(sampler["partition"], "sampler.partition");
      }
    }
  }
  if (root["seed"]) spec.seed = scalar<std::uint64_t>(root["seed"], "seed");
  if (root["trajectories"]) {
    spec.trajectories = scalar<std::size_t>(root["trajectories"], "trajectories");
  }
  if (root["workers"]) spec.workers = scalar<unsigned>(root["workers"], "workers");
  if (root["output"]) spec.output = scalar<std::string>(root["output"], "output");
  if (const YAML::Node stop = root["stop"]) {
    if (!stop.IsMap() || stop.size() != 1) {
      throw ConfigError(where("stop", stop), "expected exactly one of t_end, max_events, stalled");
    }
    only_keys(stop, "stop", {"t_end", "max_events", "stalled"});
    if (stop["t_end"]) {
      spec.stop = EndTime{scalar<double>(stop["t_end"], "stop.t_end")};
    } else if (stop["max_events"]) {
      spec.stop = EventCount{scalar<std::uint64_t>(stop["max_events"], "stop.max_events")};
    } else {
      if (!scalar<bool>(stop["stalled"], "stop.stalled")) {
        throw ConfigError(where("stop.stalled", stop["stalled"]), "must be true when given");
      }
      spec.stop = StalledOnly{};
    }
  }
  return spec;
}

RunSpec load_run_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_spec(buffer.str());
}

std::string dump_run_spec(const RunSpec& spec) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << spec.model;
  if (!spec.params.empty()) {
    out << YAML::Key << "params" << YAML::Value << YAML::BeginMap;
    for (const auto& [k, v] : spec.params) out << YAML::Key << k << YAML::Value << YAML::DoubleQuoted << v;
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
  out << YAML::Key << "sampler" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << spec.sampler.name;
  if (!spec.sampler.partition.empty()) {
    out << YAML::Key << "partition" << YAML::Value << YAML::BeginMap;
    for (const auto& [k, v] : spec.sampler.partition) out << YAML::Key << k << YAML::Value << v;
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
  out << YAML::Key << "seed" << YAML::Value << spec.seed;
  out << YAML::Key << "trajectories" << YAML::Value << spec.trajectories;
  out << YAML::Key << "stop" << YAML::Value << YAML::BeginMap;
  if (const auto* e = std::get_if<EndTime>(&spec.stop)) {
    out << YAML::Key << "t_end" << YAML::Value << e->t;
  } else if (const auto* c = std::get_if<EventCount>(&spec.stop)) {
    out << YAML::Key << "max_events" << YAML::Value << c->n;
  } else {
    out << YAML::Key << "stalled" << YAML::Value << true;
  }
  out << YAML::EndMap;
  out << YAML::Key << "output" << YAML::Value << YAML::DoubleQuoted << spec.output;
  out << YAML::Key << "workers" << YAML::Value << spec.workers;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

void validate(const RunSpec& spec) {
  try {
    make_sampler(spec.sampler);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("sampler", e.what());
  }
  try {
    validate(spec.stop);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("stop", e.what());
  }
  if (spec.trajectories < 1) throw ConfigError("trajectories", "must be at least 1");
  if (spec.workers < 1) throw ConfigError("workers", "must be at least 1");
  build_model(spec.model, spec.params);
}

}  // namespace ctde
