#include "graphdiff/run_config.hpp"

#include <cctype>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace graphdiff {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void fail(const std::string& source, std::size_t line,
                       const std::string& what) {
  throw std::invalid_argument(source + ":" + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& source, std::size_t line,
                    const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    fail(source, line, "key '" + key + "' needs a number, got '" + value + "'");
  }
  if (used != value.size()) {
    fail(source, line, "key '" + key + "' needs a number, got '" + value + "'");
  }
  return v;
}

long long parse_int(const std::string& source, std::size_t line,
                    const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &used);
  } catch (const std::exception&) {
    fail(source, line,
         "key '" + key + "' needs an integer, got '" + value + "'");
  }
  if (used != value.size()) {
    fail(source, line,
         "key '" + key + "' needs an integer, got '" + value + "'");
  }
  return v;
}

std::uint64_t parse_seed(const std::string& source, std::size_t line,
                         const std::string& key, const std::string& value) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(value, &used);
  } catch (const std::exception&) {
    fail(source, line,
         "key '" + key + "' needs a nonnegative integer, got '" + value + "'");
  }
  if (used != value.size() || (!value.empty() && value[0] == '-')) {
    fail(source, line,
         "key '" + key + "' needs a nonnegative integer, got '" + value + "'");
  }
  return v;
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& source) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::size_t lineno = 0;

  while (std::getline(in, raw)) {
    ++lineno;
    const std::size_t hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') fail(source, lineno, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "noise" && section != "model" && section != "train" &&
          section != "sample") {
        fail(source, lineno, "unknown section '" + section + "'");
      }
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail(source, lineno, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) fail(source, lineno, "expected 'key = value'");
    if (section.empty()) {
      fail(source, lineno, "key '" + key + "' appears before any section");
    }
    const std::string qual = section + "." + key;

    if (section == "noise") {
      if (key == "alpha") {
        cfg.alpha = parse_double(source, lineno, qual, value);
        if (!(cfg.alpha > 0.0)) fail(source, lineno, "noise.alpha must be > 0");
      } else if (key == "gamma") {
        cfg.gamma = parse_double(source, lineno, qual, value);
        if (!(cfg.gamma > 1.0)) fail(source, lineno, "noise.gamma must be > 1");
      } else if (key == "T") {
        cfg.horizon = parse_double(source, lineno, qual, value);
        if (!(cfg.horizon > 0.0)) fail(source, lineno, "noise.T must be > 0");
      } else if (key == "reference") {
        if (value == "uniform") {
          cfg.reference = RefKind::kUniform;
        } else if (value == "marginal") {
          cfg.reference = RefKind::kMarginal;
        } else {
          fail(source, lineno,
               "noise.reference must be 'uniform' or 'marginal', got '" +
                   value + "'");
        }
      } else {
        fail(source, lineno, "unknown key '" + qual + "'");
      }
    } else if (section == "model") {
      if (key == "layers") {
        cfg.layers = static_cast<int>(parse_int(source, lineno, qual, value));
        if (cfg.layers < 1) fail(source, lineno, "model.layers must be >= 1");
      } else if (key == "hidden") {
        cfg.hidden = static_cast<int>(parse_int(source, lineno, qual, value));
        if (cfg.hidden < 1) fail(source, lineno, "model.hidden must be >= 1");
      } else if (key == "dropout") {
        cfg.dropout = parse_double(source, lineno, qual, value);
        if (cfg.dropout < 0.0 || cfg.dropout >= 1.0) {
          fail(source, lineno, "model.dropout must lie in [0, 1)");
        }
      } else {
        fail(source, lineno, "unknown key '" + qual + "'");
      }
    } else if (section == "train") {
      if (key == "lr") {
        cfg.learning_rate = parse_double(source, lineno, qual, value);
        if (!(cfg.learning_rate > 0.0)) {
          fail(source, lineno, "train.lr must be > 0");
        }
      } else if (key == "weight_decay") {
        cfg.weight_decay = parse_double(source, lineno, qual, value);
        if (cfg.weight_decay < 0.0) {
          fail(source, lineno, "train.weight_decay must be >= 0");
        }
      } else if (key == "batch_size") {
        cfg.batch_size = static_cast<int>(parse_int(source, lineno, qual, value));
        if (cfg.batch_size < 1) fail(source, lineno, "train.batch_size must be >= 1");
      } else if (key == "epochs") {
        cfg.epochs = static_cast<int>(parse_int(source, lineno, qual, value));
        if (cfg.epochs < 1) fail(source, lineno, "train.epochs must be >= 1");
      } else if (key == "seed") {
        cfg.train_seed = parse_seed(source, lineno, qual, value);
      } else {
        fail(source, lineno, "unknown key '" + qual + "'");
      }
    } else {  // sample
      if (key == "steps") {
        cfg.sample_steps = static_cast<int>(parse_int(source, lineno, qual, value));
        if (cfg.sample_steps < 1) fail(source, lineno, "sample.steps must be >= 1");
      } else if (key == "count") {
        cfg.sample_count = static_cast<int>(parse_int(source, lineno, qual, value));
        if (cfg.sample_count < 0) fail(source, lineno, "sample.count must be >= 0");
      } else if (key == "seed") {
        cfg.sample_seed = parse_seed(source, lineno, qual, value);
      } else {
        fail(source, lineno, "unknown key '" + qual + "'");
      }
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("run config: cannot open " + path);
  std::ostringstream ss;
  ss << file.rdbuf();
  return parse_run_config(ss.str(), path);
}

}  // namespace graphdiff
