// Run configuration: a flat key = value text file that round-trips exactly.
// CLI flags override file values, which override the built-in defaults.
#pragma once

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "panforge/loss/losses.hpp"
#include "panforge/nn/transform_net.hpp"

namespace panforge {

inline WidthMult WidthMult::parse(const std::string& text) {
  WidthMult m;
  const auto slash = text.find('/');
  try {
    if (slash == std::string::npos) {
      // accept decimals like 0.25 when they are an exact small fraction
      const double v = std::stod(text);
      if (v <= 0 || v > 1) throw ConfigError("width multiplier must lie in (0,1]: " + text);
      for (int den = 1; den <= 64; ++den) {
        const double num = v * den;
        if (std::abs(num - std::round(num)) < 1e-9) {
          m.num = static_cast<int>(std::round(num));
          m.den = den;
          validate_width_mult(m);
          return m;
        }
      }
      throw ConfigError("width multiplier is not a fraction with denominator <= 64: " + text);
    }
    m.num = std::stoi(text.substr(0, slash));
    m.den = std::stoi(text.substr(slash + 1));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse width multiplier: " + text);
  }
  validate_width_mult(m);
  return m;
}

inline LossVariant parse_variant(const std::string& s) {
  if (s == "pan") return LossVariant::pan;
  if (s == "l2") return LossVariant::l2;
  if (s == "l2_gan") return LossVariant::l2_gan;
  throw ConfigError("unknown loss variant '" + s + "' (expected pan, l2 or l2_gan)");
}

namespace cli {

struct RunConfig {
  std::string task = "streak";  // streak | inpaint | labels
  int size = 64;
  WidthMult width_mult{1, 4};

  std::string loss = "pan";
  double lambda1 = 5.0, lambda2 = 1.5, lambda3 = 1.5, lambda4 = 5.0;
  double margin = 13.0;
  double pixel_weight = 100.0;

  double lr = 2e-4, beta1 = 0.5, beta2 = 0.999, adam_eps = 1e-8;

  int batch = 4;
  long long iters = 2000;
  unsigned long long seed = 1;
  int checkpoint_every = 500;

  int n_train = 64, n_test = 16;
  double streak_density = 0.01;
  double hole_fraction = 0.25;
  int n_shapes = 3;

  std::string data_dir;  // dataset root (gendata writes, train/eval read)
  std::string out_dir;   // run root (config echo, checkpoints/, logs.tsv, reports/)

  bool operator==(const RunConfig&) const = default;

  LossConfig<float> loss_config() const {
    LossConfig<float> lc;
    lc.lambdas = {static_cast<float>(lambda1), static_cast<float>(lambda2),
                  static_cast<float>(lambda3), static_cast<float>(lambda4)};
    lc.margin = static_cast<float>(margin);
    lc.variant = parse_variant(loss);
    lc.pixel_weight = static_cast<float>(pixel_weight);
    return lc;
  }
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);  // shortest round-trip
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects a number, got '" + v + "'");
  }
}

inline long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects an integer, got '" + v + "'");
  }
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

}  // namespace detail

inline std::string serialize_config(const RunConfig& c) {
  std::ostringstream os;
  const auto& d = detail::fmt_double;
  os << "task = " << c.task << "\n";
  os << "size = " << c.size << "\n";
  os << "width_mult = " << c.width_mult.to_string() << "\n";
  os << "loss = " << c.loss << "\n";
  os << "lambda1 = " << d(c.lambda1) << "\n";
  os << "lambda2 = " << d(c.lambda2) << "\n";
  os << "lambda3 = " << d(c.lambda3) << "\n";
  os << "lambda4 = " << d(c.lambda4) << "\n";
  os << "margin = " << d(c.margin) << "\n";
  os << "pixel_weight = " << d(c.pixel_weight) << "\n";
  os << "lr = " << d(c.lr) << "\n";
  os << "beta1 = " << d(c.beta1) << "\n";
  os << "beta2 = " << d(c.beta2) << "\n";
  os << "adam_eps = " << d(c.adam_eps) << "\n";
  os << "batch = " << c.batch << "\n";
  os << "iters = " << c.iters << "\n";
  os << "seed = " << c.seed << "\n";
  os << "checkpoint_every = " << c.checkpoint_every << "\n";
  os << "n_train = " << c.n_train << "\n";
  os << "n_test = " << c.n_test << "\n";
  os << "streak_density = " << d(c.streak_density) << "\n";
  os << "hole_fraction = " << d(c.hole_fraction) << "\n";
  os << "n_shapes = " << c.n_shapes << "\n";
  os << "data_dir = " << c.data_dir << "\n";
  os << "out_dir = " << c.out_dir << "\n";
  return os.str();
}

inline void apply_config_line(RunConfig& c, const std::string& key, const std::string& value) {
  using detail::parse_double;
  using detail::parse_int;
  if (key == "task") c.task = value;
  else if (key == "size") c.size = static_cast<int>(parse_int(key, value));
  else if (key == "width_mult") c.width_mult = WidthMult::parse(value);
  else if (key == "loss") {
    parse_variant(value);  // reject unknown variants early
    c.loss = value;
  }
  else if (key == "lambda1") c.lambda1 = parse_double(key, value);
  else if (key == "lambda2") c.lambda2 = parse_double(key, value);
  else if (key == "lambda3") c.lambda3 = parse_double(key, value);
  else if (key == "lambda4") c.lambda4 = parse_double(key, value);
  else if (key == "margin") c.margin = parse_double(key, value);
  else if (key == "pixel_weight") c.pixel_weight = parse_double(key, value);
  else if (key == "lr") c.lr = parse_double(key, value);
  else if (key == "beta1") c.beta1 = parse_double(key, value);
  else if (key == "beta2") c.beta2 = parse_double(key, value);
  else if (key == "adam_eps") c.adam_eps = parse_double(key, value);
  else if (key == "batch") c.batch = static_cast<int>(parse_int(key, value));
  else if (key == "iters") c.iters = parse_int(key, value);
  else if (key == "seed") c.seed = static_cast<unsigned long long>(parse_int(key, value));
  else if (key == "checkpoint_every") c.checkpoint_every = static_cast<int>(parse_int(key, value));
  else if (key == "n_train") c.n_train = static_cast<int>(parse_int(key, value));
  else if (key == "n_test") c.n_test = static_cast<int>(parse_int(key, value));
  else if (key == "streak_density") c.streak_density = parse_double(key, value);
  else if (key == "hole_fraction") c.hole_fraction = parse_double(key, value);
  else if (key == "n_shapes") c.n_shapes = static_cast<int>(parse_int(key, value));
  else if (key == "data_dir") c.data_dir = value;
  else if (key == "out_dir") c.out_dir = value;
  else throw ConfigError("unknown config key '" + key + "'");
}

inline RunConfig parse_config_text(const std::string& text, RunConfig base = {}) {
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string stripped = detail::trim(line.substr(0, line.find('#')));
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + " is not key = value: " + line);
    apply_config_line(base, detail::trim(stripped.substr(0, eq)), detail::trim(stripped.substr(eq + 1)));
  }
  return base;
}

inline RunConfig load_config(const std::string& path, RunConfig base = {}) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), std::move(base));
}

}  // namespace cli
}  // namespace panforge
