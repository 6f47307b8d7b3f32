#include "glrc/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "glrc/error.hpp"

namespace glrc {
namespace {

namespace pt = boost::property_tree;

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

std::uint64_t to_count(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    // Allow 1e5-style counts.
    const double d = to_double(key, v);
    if (d < 0 || d != static_cast<double>(static_cast<std::uint64_t>(d))) {
      throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    }
    return static_cast<std::uint64_t>(d);
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Field {
  Setter set;
  Getter get;
};

// Ordered so render_config output is stable.
const std::map<std::string, Field>& schema() {
  static const std::map<std::string, Field> fields = [] {
    std::map<std::string, Field> f;
    auto real = [&](const std::string& key, auto accessor) {
      f[key] = {[key, accessor](RunConfig& c, const std::string& v) { accessor(c) = to_double(key, v); },
                [accessor](const RunConfig& c) { return format_double(accessor(c)); }};
    };
    auto count = [&](const std::string& key, auto accessor) {
      f[key] = {[key, accessor](RunConfig& c, const std::string& v) {
                  using T = std::remove_cvref_t<decltype(accessor(c))>;
                  const auto n = to_count(key, v);
                  if (n > std::numeric_limits<T>::max()) throw ConfigError(key + ": value too large");
                  accessor(c) = static_cast<T>(n);
                },
                [accessor](const RunConfig& c) { return std::to_string(accessor(c)); }};
    };
    auto flag = [&](const std::string& key, auto accessor) {
      f[key] = {[key, accessor](RunConfig& c, const std::string& v) { accessor(c) = to_bool(key, v); },
                [accessor](const RunConfig& c) { return accessor(c) ? "true" : "false"; }};
    };
    auto text = [&](const std::string& key, auto accessor) {
      f[key] = {[accessor](RunConfig& c, const std::string& v) { accessor(c) = v; },
                [accessor](const RunConfig& c) { return accessor(c); }};
    };

    text("data.interactions", [](auto& c) -> auto& { return c.interactions; });
    text("data.split_dir", [](auto& c) -> auto& { return c.split_dir; });
    real("data.train_ratio", [](auto& c) -> auto& { return c.ratios.train; });
    real("data.valid_ratio", [](auto& c) -> auto& { return c.ratios.valid; });
    real("data.test_ratio", [](auto& c) -> auto& { return c.ratios.test; });

    count("model.dim", [](auto& c) -> auto& { return c.dim; });
    count("model.teacher_layers", [](auto& c) -> auto& { return c.teacher_layers; });
    count("model.student_layers", [](auto& c) -> auto& { return c.student_layers; });
    real("model.leaky_slope", [](auto& c) -> auto& { return c.leaky_slope; });
    flag("model.average_layers", [](auto& c) -> auto& { return c.average_layers; });

    real("loss.lambda1", [](auto& c) -> auto& { return c.weights.lambda1; });
    real("loss.lambda2", [](auto& c) -> auto& { return c.weights.lambda2; });
    real("loss.lambda3", [](auto& c) -> auto& { return c.weights.lambda3; });
    real("loss.lambda4", [](auto& c) -> auto& { return c.weights.lambda4; });
    real("loss.teacher_decay", [](auto& c) -> auto& { return c.weights.teacher_decay; });
    real("loss.tau1", [](auto& c) -> auto& { return c.weights.tau1; });
    real("loss.tau2", [](auto& c) -> auto& { return c.weights.tau2; });
    real("loss.tau3", [](auto& c) -> auto& { return c.weights.tau3; });
    real("loss.epsilon", [](auto& c) -> auto& { return c.weights.epsilon; });

    f["train.mode"] = {[](RunConfig& c, const std::string& v) { c.mode = parse_run_mode(v); },
                       [](const RunConfig& c) { return std::string(to_string(c.mode)); }};
    count("train.seed", [](auto& c) -> auto& { return c.seed; });
    real("train.learning_rate", [](auto& c) -> auto& { return c.weights.learning_rate; });
    count("train.epochs", [](auto& c) -> auto& { return c.weights.max_epochs; });
    real("train.teacher_lr", [](auto& c) -> auto& { return c.teacher_lr; });
    count("train.teacher_epochs", [](auto& c) -> auto& { return c.teacher_epochs; });
    count("train.patience", [](auto& c) -> auto& { return c.patience; });
    count("train.eval_every", [](auto& c) -> auto& { return c.eval_every; });
    count("train.batch_t1", [](auto& c) -> auto& { return c.batch_t1; });
    count("train.batch_t2", [](auto& c) -> auto& { return c.batch_t2; });
    count("train.batch_bpr", [](auto& c) -> auto& { return c.batch_bpr; });
    flag("train.plain_sgd", [](auto& c) -> auto& { return c.plain_sgd; });
    flag("train.disable_l1", [](auto& c) -> auto& { return c.ablation.disable_l1; });
    flag("train.disable_l2", [](auto& c) -> auto& { return c.ablation.disable_l2; });
    flag("train.disable_l3", [](auto& c) -> auto& { return c.ablation.disable_l3; });

    text("output.dir", [](auto& c) -> auto& { return c.output_dir; });
    return f;
  }();
  return fields;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config syntax error at line " + std::to_string(e.line()) + ": " + e.message());
  }
  RunConfig config;
  const auto& fields = schema();
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("key '" + section + "' must live inside a [section]");
    }
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      const auto it = fields.find(full);
      if (it == fields.end()) throw ConfigError("unknown config key '" + full + "'");
      it->second.set(config, value.data());
    }
  }
  auto resolve = [&](std::string& p) {
    if (!p.empty() && !base_dir.empty() && std::filesystem::path(p).is_relative()) {
      p = (base_dir / p).lexically_normal().string();
    }
  };
  resolve(config.interactions);
  resolve(config.split_dir);
  resolve(config.output_dir);
  config.validate();
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::string render_config(const RunConfig& config) {
  std::string out;
  std::string current;
  for (const auto& [key, field] : schema()) {
    const auto dot = key.find('.');
    const auto section = key.substr(0, dot);
    if (section != current) {
      out += (current.empty() ? "[" : "\n[") + section + "]\n";
      current = section;
    }
    out += key.substr(dot + 1) + " = " + field.get(config) + "\n";
  }
  return out;
}

std::string config_hash(const RunConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : render_config(config)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace glrc
