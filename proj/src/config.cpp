#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "hash.hpp"

namespace genlab {

void ExperimentConfig::validate() const {
  world.validate();
  if (classifier_hidden <= 0) throw std::invalid_argument("config: classifier.hidden_width must be positive");
  if (epochs < 1 || batch_size < 2) throw std::invalid_argument("config: bad train shape");
  if (replacement_fraction < 0.0 || replacement_fraction > 1.0) {
    throw std::invalid_argument("config: smoothing.replacement_fraction must be in [0,1]");
  }
  hsm.validate();
  if (bna_passes < 1) throw std::invalid_argument("config: bna.passes must be >= 1");
  if (seeds.empty()) throw std::invalid_argument("config: seed list must be nonempty");
  if (train_per_class <= 0 || test_per_class <= 0) {
    throw std::invalid_argument("config: eval per-class counts must be positive");
  }
  for (double r : r_grid) {
    if (r < 0.0 || r > 1.0) throw std::invalid_argument("config: sweep.r_grid entries must be in [0,1]");
  }
}

ClassifierSpec ExperimentConfig::classifier_spec() const {
  return ClassifierSpec{world.obs_dim, classifier_hidden, world.class_count,
                        classifier_activation};
}

TrainRunConfig ExperimentConfig::run_config(uint64_t seed) const {
  TrainRunConfig run;
  run.epochs = epochs;
  run.batch_size = batch_size;
  run.lr0 = lr0;
  run.momentum = momentum;
  run.weight_decay = weight_decay;
  run.seed = seed;
  return run;
}

namespace {

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

double parse_double(const std::string& s) {
  size_t pos = 0;
  double x = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("not a number: '" + s + "'");
  return x;
}

long long parse_int(const std::string& s) {
  size_t pos = 0;
  long long x = std::stoll(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("not an integer: '" + s + "'");
  return x;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("not a boolean: '" + s + "'");
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(ch))) {
      cur += ch;
    }
  }
  if (!cur.empty() || !out.empty()) out.push_back(cur);
  return out;
}

struct FieldDef {
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

const std::map<std::string, FieldDef>& registry() {
  static const std::map<std::string, FieldDef> fields = [] {
    std::map<std::string, FieldDef> f;
    auto add_int = [&f](const std::string& key, auto member) {
      f[key] = {[member](const ExperimentConfig& c) { return std::to_string(c.*member); },
                [member, key](ExperimentConfig& c, const std::string& v) {
                  c.*member = static_cast<std::remove_reference_t<decltype(c.*member)>>(parse_int(v));
                }};
    };
    auto add_wint = [&f](const std::string& key, auto member) {
      f[key] = {[member](const ExperimentConfig& c) { return std::to_string(c.world.*member); },
                [member](ExperimentConfig& c, const std::string& v) {
                  c.world.*member = static_cast<std::remove_reference_t<decltype(c.world.*member)>>(parse_int(v));
                }};
    };
    auto add_dbl = [&f](const std::string& key, auto member) {
      f[key] = {[member](const ExperimentConfig& c) { return fmt_double(c.*member); },
                [member](ExperimentConfig& c, const std::string& v) { c.*member = parse_double(v); }};
    };
    auto add_wdbl = [&f](const std::string& key, auto member) {
      f[key] = {[member](const ExperimentConfig& c) { return fmt_double(c.world.*member); },
                [member](ExperimentConfig& c, const std::string& v) { c.world.*member = parse_double(v); }};
    };
    auto add_bool = [&f](const std::string& key, auto member) {
      f[key] = {[member](const ExperimentConfig& c) { return fmt_bool(c.*member); },
                [member](ExperimentConfig& c, const std::string& v) { c.*member = parse_bool(v); }};
    };

    add_wint("world.class_count", &WorldConfig::class_count);
    add_wint("world.latent_dim", &WorldConfig::latent_dim);
    add_wint("world.obs_dim", &WorldConfig::obs_dim);
    add_wint("world.hidden_dim", &WorldConfig::hidden_dim);
    add_wint("world.master_seed", &WorldConfig::master_seed);
    add_wdbl("world.truncation", &WorldConfig::truncation);
    add_wdbl("world.real_noise_sigma", &WorldConfig::real_noise_sigma);
    add_wdbl("world.perturb_scale_min", &WorldConfig::perturb_scale_min);
    add_wdbl("world.perturb_scale_max", &WorldConfig::perturb_scale_max);
    add_wdbl("world.perturb_shift_min", &WorldConfig::perturb_shift_min);
    add_wdbl("world.perturb_shift_max", &WorldConfig::perturb_shift_max);

    add_int("classifier.hidden_width", &ExperimentConfig::classifier_hidden);
    f["classifier.activation"] = {
        [](const ExperimentConfig& c) {
          return c.classifier_activation == Activation::kRelu ? "relu" : "tanh";
        },
        [](ExperimentConfig& c, const std::string& v) {
          if (v == "relu") c.classifier_activation = Activation::kRelu;
          else if (v == "tanh") c.classifier_activation = Activation::kTanh;
          else throw std::invalid_argument("activation must be relu or tanh, got '" + v + "'");
        }};

    add_int("train.epochs", &ExperimentConfig::epochs);
    add_int("train.batch_size", &ExperimentConfig::batch_size);
    add_dbl("train.lr", &ExperimentConfig::lr0);
    add_dbl("train.momentum", &ExperimentConfig::momentum);
    add_dbl("train.weight_decay", &ExperimentConfig::weight_decay);
    add_int("train.dataset_size", &ExperimentConfig::dataset_size);
    add_int("train.collect_chunk", &ExperimentConfig::collect_chunk);

    add_dbl("smoothing.replacement_fraction", &ExperimentConfig::replacement_fraction);

    f["hsm.step_size"] = {[](const ExperimentConfig& c) { return fmt_double(c.hsm.step_size); },
                          [](ExperimentConfig& c, const std::string& v) { c.hsm.step_size = parse_double(v); }};
    f["hsm.step_count"] = {[](const ExperimentConfig& c) { return std::to_string(c.hsm.step_count); },
                           [](ExperimentConfig& c, const std::string& v) { c.hsm.step_count = static_cast<int>(parse_int(v)); }};
    f["hsm.recompute_target"] = {[](const ExperimentConfig& c) { return fmt_bool(c.hsm.recompute_target); },
                                 [](ExperimentConfig& c, const std::string& v) { c.hsm.recompute_target = parse_bool(v); }};

    add_int("bna.passes", &ExperimentConfig::bna_passes);
    add_bool("bna.reset_before_adapt", &ExperimentConfig::bna_reset_stats);

    add_bool("methods.hsm", &ExperimentConfig::method_hsm);
    add_bool("methods.ds", &ExperimentConfig::method_ds);
    add_bool("methods.bna", &ExperimentConfig::method_bna);

    add_int("eval.train_per_class", &ExperimentConfig::train_per_class);
    add_int("eval.test_per_class", &ExperimentConfig::test_per_class);

    f["sweep.r_grid"] = {
        [](const ExperimentConfig& c) {
          std::string out;
          for (size_t i = 0; i < c.r_grid.size(); ++i)
            out += (i ? "," : "") + fmt_double(c.r_grid[i]);
          return out;
        },
        [](ExperimentConfig& c, const std::string& v) {
          c.r_grid.clear();
          for (const auto& tok : split_commas(v)) c.r_grid.push_back(parse_double(tok));
        }};
    f["seeds"] = {
        [](const ExperimentConfig& c) {
          std::string out;
          for (size_t i = 0; i < c.seeds.size(); ++i)
            out += (i ? "," : "") + std::to_string(c.seeds[i]);
          return out;
        },
        [](ExperimentConfig& c, const std::string& v) {
          c.seeds.clear();
          for (const auto& tok : split_commas(v))
            c.seeds.push_back(static_cast<uint64_t>(parse_int(tok)));
        }};
    return f;
  }();
  return fields;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  ExperimentConfig cfg;
  const auto& fields = registry();
  std::set<std::string> seen;
  std::vector<std::string> errors;

  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    lineno++;
    if (auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
      continue;
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    auto it = fields.find(key);
    if (it == fields.end()) {
      errors.push_back(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
      continue;
    }
    if (!seen.insert(key).second) {
      errors.push_back(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
      continue;
    }
    try {
      it->second.set(cfg, value);
    } catch (const std::exception& e) {
      errors.push_back(origin + ":" + std::to_string(lineno) + ": " + key + ": " + e.what());
    }
  }

  // report every missing key at once
  std::vector<std::string> missing;
  for (const auto& [key, def] : fields) {
    if (!seen.count(key)) missing.push_back(key);
  }
  if (!missing.empty()) {
    std::string msg = origin + ": missing required keys:";
    for (const auto& k : missing) msg += " " + k;
    errors.push_back(msg);
  }
  if (!errors.empty()) {
    std::string msg;
    for (const auto& e : errors) msg += (msg.empty() ? "" : "\n") + e;
    throw std::invalid_argument(msg);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str(), path);
}

void set_config_key(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value) {
  const auto& fields = registry();
  auto it = fields.find(key);
  if (it == fields.end()) throw std::invalid_argument("unknown config key '" + key + "'");
  it->second.set(cfg, value);
}

std::string emit_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [key, def] : registry()) {  // std::map: sorted, canonical
    out += key + " = " + def.get(cfg) + "\n";
  }
  return out;
}

void emit_config_file(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("config: cannot open " + path + " for writing");
  os << emit_config(cfg);
}

std::string config_fingerprint(const ExperimentConfig& cfg) {
  ByteHash h;
  h.update(emit_config(cfg));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h.digest()));
  return buf;
}

}  // namespace genlab
