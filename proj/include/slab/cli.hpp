#pragma once

// Run configuration, scenario orchestration and result files for the slab
// command-line tool.

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "slab/experiments.hpp"

namespace slab::cli {

using Json = nlohmann::ordered_json;

enum ExitCode : int { kExitPass = 0, kExitFail = 1, kExitConfig = 2, kExitIo = 3 };

/// Configuration problems, with every violated precondition listed.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : std::runtime_error(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& p : v) s += (s.empty() ? "" : "\n") + p;
    return s;
  }
  std::vector<std::string> problems_;
};

// ---------------------------------------------------------------------------
// Scenarios and operators

struct ScenarioInfo {
  const char* name;
  const char* prediction;
  const char* claim;
};

inline const std::vector<ScenarioInfo>& scenarios() {
  static const std::vector<ScenarioInfo> table{
      {"bump-scaling", "predicted slope -3/q (L^q), +1/2 (H^2)",
       "bump on S^3: ||phi_lambda||_{L^q} ~ lambda^{-3/q}, ||phi_lambda||_{H^2} ~ lambda^{2-3/2}"},
      {"sharpness", "predicted slope 1/p - s",
       "stationary family on S^3 x S^3 under Delta_x - Delta_y: Strichartz fails for s < 3(1/2 - 1/q) = 1/p"},
      {"dispersion", "predicted slope -m/2",
       "dispersive bound |t|^{-m/2} h^{m-n} for the LP-localized point mass on T^2"},
      {"random-sweep", "predicted bounded block maxima at s = (2n/m - 1)/p",
       "Strichartz bound ||u||_{L^p L^q} <= C ||u0||_{H^{1/p}}, 1/p + 1/q = 1/2, p > 2"},
      {"energy-drift", "predicted ratio 1",
       "||u(t)||_{H^s} = ||u0||_{H^s} when P commutes with Delta (signature operators)"},
      {"invariants", "predicted defect 0",
       "partition of unity, Haar invariance, character stationarity, Galerkin consistency, (H2) rank"},
  };
  return table;
}

inline const ScenarioInfo* find_scenario(const std::string& name) {
  for (const auto& s : scenarios()) {
    if (name == s.name) return &s;
  }
  return nullptr;
}

inline std::string list_scenarios() {
  std::string out;
  for (const auto& s : scenarios()) {
    out += std::string(s.name) + ": " + s.prediction + "\n    " + s.claim + "\n";
  }
  return out;
}

inline const std::vector<std::string>& operator_names() {
  static const std::vector<std::string> names{"elliptic-t2", "non-elliptic-t2", "elliptic-s3xs3",
                                              "stationary-s3xs3"};
  return names;
}

/// Named signature operators: -Delta on T^2, -(d_1^2 - d_2^2) on T^1 x T^1,
/// and -(Delta_x +- Delta_y) on S^3 x S^3.
inline SignatureOperator make_operator(const std::string& name) {
  if (name == "elliptic-t2") return SignatureOperator(ManifoldSpec::torus(2), {1});
  if (name == "non-elliptic-t2") return SignatureOperator(ManifoldSpec::circles(2), {1, -1});
  if (name == "elliptic-s3xs3") return SignatureOperator(ManifoldSpec::sphere3_squared(), {1, 1});
  if (name == "stationary-s3xs3") return SignatureOperator(ManifoldSpec::sphere3_squared(), {1, -1});
  throw InvalidArgument("unknown operator '" + name + "'");
}

inline bool is_t2_operator(const std::string& name) { return name == "elliptic-t2" || name == "non-elliptic-t2"; }

// ---------------------------------------------------------------------------
// RunConfig

struct RunConfig {
  std::string scenario;
  std::uint64_t seed = 1;
  std::string out;
  double tolerance = 0.05;

  // bump-scaling, sharpness
  std::vector<double> q_values{4.0};
  std::vector<double> lambdas{8, 16, 32, 64, 128, 256};
  double r0 = 0.5;
  int grid_multiplier = kBumpGridMultiplier;

  // sharpness, random-sweep
  double p = 2.0;
  double q = 3.0;
  std::vector<double> s_values{0.25};

  // dispersion, random-sweep, energy-drift
  std::vector<std::string> operators{"non-elliptic-t2"};
  int j = 7;
  double alpha = 0.5;
  int n_times = 16;
  int grid_n = 0;
  double stability_tolerance = 0.05;
  std::vector<int> js{2, 3, 4, 5, 6};
  int trials = 16;
  std::vector<double> times{0.1, 0.5, 1.0};
  int max_frequency = 8;

  bool admissible() const {
    if (scenario == "sharpness") return MixedNormSpec{p, q}.admissible(6);
    if (scenario == "random-sweep") return MixedNormSpec{p, q}.admissible(2);
    return true;
  }

  /// Every field the scenario uses, defaults included.
  Json echo() const {
    Json j_out;
    j_out["scenario"] = scenario;
    j_out["seed"] = seed;
    if (!out.empty()) j_out["out"] = out;
    if (scenario != "invariants") j_out["tolerance"] = tolerance;
    if (scenario == "bump-scaling" || scenario == "sharpness") {
      if (scenario == "bump-scaling") {
        j_out["q"] = q_values;
      } else {
        j_out["p"] = p;
        j_out["q"] = q;
        j_out["s"] = s_values;
        j_out["admissible"] = admissible();
      }
      j_out["lambdas"] = lambdas;
      j_out["r0"] = r0;
      j_out["grid_multiplier"] = grid_multiplier;
    } else if (scenario == "dispersion") {
      j_out["operator"] = operators;
      j_out["j"] = j;
      j_out["alpha"] = alpha;
      j_out["n_times"] = n_times;
      j_out["grid_n"] = grid_n;
      j_out["stability_tolerance"] = stability_tolerance;
    } else if (scenario == "random-sweep") {
      j_out["operator"] = operators;
      j_out["p"] = p;
      j_out["q"] = q;
      j_out["s"] = s_values;
      j_out["js"] = js;
      j_out["trials"] = trials;
      j_out["admissible"] = admissible();
    } else if (scenario == "energy-drift") {
      j_out["operator"] = operators;
      j_out["s"] = s_values;
      j_out["times"] = times;
      j_out["max_frequency"] = max_frequency;
    }
    return j_out;
  }
};

namespace detail {

inline std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

/// Reads typed fields out of the JSON object, collecting every problem.
class Reader {
 public:
  Reader(const Json& doc, std::vector<std::string>& problems) : doc_(doc), problems_(problems) {}

  bool has(const char* key) const { return doc_.contains(key); }
  void use(const char* key) { used_.insert(key); }
  const std::set<std::string>& used() const { return used_; }

  void number(const char* key, double& v) {
    use(key);
    if (!has(key)) return;
    const auto& x = doc_.at(key);
    if (!x.is_number()) return fail(key, "expected a number");
    v = x.get<double>();
    if (!std::isfinite(v)) fail(key, "must be finite");
  }

  void integer(const char* key, int& v) {
    use(key);
    if (!has(key)) return;
    const auto& x = doc_.at(key);
    if (!x.is_number_integer()) return fail(key, "expected an integer");
    const auto w = x.get<std::int64_t>();
    if (w < -(1LL << 30) || w > (1LL << 30)) return fail(key, "out of range");
    v = static_cast<int>(w);
  }

  void seed(const char* key, std::uint64_t& v) {
    use(key);
    if (!has(key)) return;
    const auto& x = doc_.at(key);
    if (x.is_number_unsigned()) {
      v = x.get<std::uint64_t>();
    } else if (x.is_number_integer() && x.get<std::int64_t>() >= 0) {
      v = static_cast<std::uint64_t>(x.get<std::int64_t>());
    } else {
      fail(key, "expected an unsigned 64-bit integer");
    }
  }

  void string(const char* key, std::string& v) {
    use(key);
    if (!has(key)) return;
    const auto& x = doc_.at(key);
    if (!x.is_string()) return fail(key, "expected a string");
    v = x.get<std::string>();
  }

  /// A number or an array of numbers.
  void numbers(const char* key, std::vector<double>& v) {
    use(key);
    if (!has(key)) return;
    const auto& x = doc_.at(key);
    if (x.is_number()) {
      v = {x.get<double>()};
      return;
    }
    if (!x.is_array()) return fail(key, "expected a number or an array of numbers");
    std::vector<double> out;
    for (const auto& e : x) {
      if (!e.is_number()) return fail(key, "expected a number or an array of numbers");
      out.push_back(e.get<double>());
    }
    v = std::move(out);
  }

  void integers(const char* key, std::vector<int>& v) {
    use(key);
    if (!has(key)) return;
    const auto& x = doc_.at(key);
    if (!x.is_array()) return fail(key, "expected an array of integers");
    std::vector<int> out;
    for (const auto& e : x) {
      if (!e.is_number_integer()) return fail(key, "expected an array of integers");
      out.push_back(static_cast<int>(e.get<std::int64_t>()));
    }
    v = std::move(out);
  }

  /// A string or an array of strings.
  void strings(const char* key, std::vector<std::string>& v) {
    use(key);
    if (!has(key)) return;
    const auto& x = doc_.at(key);
    if (x.is_string()) {
      v = {x.get<std::string>()};
      return;
    }
    if (!x.is_array()) return fail(key, "expected a string or an array of strings");
    std::vector<std::string> out;
    for (const auto& e : x) {
      if (!e.is_string()) return fail(key, "expected a string or an array of strings");
      out.push_back(e.get<std::string>());
    }
    v = std::move(out);
  }

  void fail(const std::string& key, const std::string& msg) { problems_.push_back(key + ": " + msg); }

 private:
  const Json& doc_;
  std::vector<std::string>& problems_;
  std::set<std::string> used_;
};

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace detail

inline constexpr double kVariationFactor = 2.0;
inline constexpr double kUnitarityTolerance = 1e-12;

/// Parses and validates a JSON run configuration. Throws ConfigError listing
/// every problem found.
inline RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>") {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = detail::line_col(text, e.byte == 0 ? 0 : e.byte - 1);
    std::string what = e.what();
    if (const auto pos = what.find("syntax error"); pos != std::string::npos) what = what.substr(pos);
    throw ConfigError({origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + what});
  }
  if (!doc.is_object()) throw ConfigError({origin + ": top level must be a JSON object"});

  std::vector<std::string> problems;
  detail::Reader rd(doc, problems);
  RunConfig c;
  rd.string("scenario", c.scenario);
  if (!rd.has("scenario")) {
    throw ConfigError({"scenario: required (one of bump-scaling, sharpness, dispersion, random-sweep, "
                       "energy-drift, invariants)"});
  }
  if (!find_scenario(c.scenario)) {
    std::string names;
    for (const auto& s : scenarios()) names += (names.empty() ? "" : ", ") + std::string(s.name);
    throw ConfigError({"scenario: unknown scenario '" + c.scenario + "' (expected one of " + names + ")"});
  }
  rd.seed("seed", c.seed);
  rd.string("out", c.out);
  const std::string& sc = c.scenario;

  // Scenario-specific defaults.
  if (sc == "dispersion") c.tolerance = kDispersionTolerance;
  if (sc == "random-sweep") {
    c.operators = {"elliptic-t2", "non-elliptic-t2"};
    c.p = 6.0;
    c.q = 3.0;
    c.tolerance = kVariationFactor;
  }
  if (sc == "energy-drift") {
    c.operators = {"elliptic-t2", "non-elliptic-t2", "stationary-s3xs3"};
    c.s_values = {0.0, 0.5, 1.0};
    c.tolerance = kUnitarityTolerance;
  }
  if (sc != "invariants") rd.number("tolerance", c.tolerance);

  auto check_lambdas = [&] {
    rd.numbers("lambdas", c.lambdas);
    rd.number("r0", c.r0);
    rd.integer("grid_multiplier", c.grid_multiplier);
    if (c.lambdas.size() < 4) rd.fail("lambdas", "need at least 4 values for a slope fit");
    double lo = 1e300, hi = 0.0;
    for (double l : c.lambdas) {
      if (!(l >= 1.0) || !(l <= 4096.0)) rd.fail("lambdas", "values must lie in [1, 4096]");
      lo = std::min(lo, l);
      hi = std::max(hi, l);
    }
    if (c.lambdas.size() >= 4 && hi < 4.0 * lo) rd.fail("lambdas", "must span at least two octaves");
    if (!(c.r0 > 0.0 && c.r0 < 1.0)) rd.fail("r0", "must lie in (0, 1)");
    if (c.grid_multiplier < 1 || c.grid_multiplier > 4096) rd.fail("grid_multiplier", "must lie in [1, 4096]");
    if (hi * c.grid_multiplier > double(1 << 22)) rd.fail("grid_multiplier", "grid exceeds 2^22 nodes at max lambda");
  };
  auto check_exponents = [&] {
    rd.number("p", c.p);
    rd.number("q", c.q);
    if (!(c.p >= 1.0)) rd.fail("p", "must be >= 1");
    if (!(c.q >= 1.0)) rd.fail("q", "must be >= 1");
  };
  auto check_operators = [&](bool t2_only) {
    rd.strings("operator", c.operators);
    if (c.operators.empty()) rd.fail("operator", "at least one operator required");
    for (const auto& op : c.operators) {
      if (std::find(operator_names().begin(), operator_names().end(), op) == operator_names().end()) {
        std::string names;
        for (const auto& n : operator_names()) names += (names.empty() ? "" : ", ") + n;
        rd.fail("operator", "unknown operator '" + op + "' (expected one of " + names + ")");
      } else if (t2_only && !is_t2_operator(op)) {
        rd.fail("operator", "'" + op + "' is not an operator on T^2");
      }
    }
  };

  if (sc == "bump-scaling") {
    rd.numbers("q", c.q_values);
    if (c.q_values.empty()) rd.fail("q", "at least one exponent required");
    for (double q : c.q_values) {
      if (!(q >= 1.0)) rd.fail("q", "must be >= 1");
    }
    check_lambdas();
  } else if (sc == "sharpness") {
    check_exponents();
    rd.numbers("s", c.s_values);
    if (c.s_values.empty()) rd.fail("s", "at least one regularity required");
    for (double s : c.s_values) {
      if (!(s >= 0.0 && s <= 2.0)) rd.fail("s", "must lie in [0, 2]");
    }
    check_lambdas();
  } else if (sc == "dispersion") {
    check_operators(true);
    rd.integer("j", c.j);
    rd.number("alpha", c.alpha);
    rd.integer("n_times", c.n_times);
    rd.integer("grid_n", c.grid_n);
    rd.number("stability_tolerance", c.stability_tolerance);
    if (c.j < 4 || c.j > 9) rd.fail("j", "must lie in [4, 9] (h = 2^{-j})");
    if (!(c.alpha > 0.0 && c.alpha <= 1.0)) rd.fail("alpha", "must lie in (0, 1]");
    if (c.n_times < 4 || c.n_times > 256) rd.fail("n_times", "must lie in [4, 256]");
    if (c.grid_n != 0 && (!detail::is_power_of_two(c.grid_n) || c.grid_n > 4096)) {
      rd.fail("grid_n", "must be 0 (automatic) or a power of two <= 4096");
    }
    if (!(c.stability_tolerance > 0.0)) rd.fail("stability_tolerance", "must be > 0");
  } else if (sc == "random-sweep") {
    check_operators(true);
    check_exponents();
    if (!rd.has("s")) c.s_values = {1.0 / c.p};
    rd.numbers("s", c.s_values);
    rd.integers("js", c.js);
    rd.integer("trials", c.trials);
    if (c.s_values.empty()) rd.fail("s", "at least one regularity required");
    for (double s : c.s_values) {
      if (!(s >= 0.0 && s <= 2.0)) rd.fail("s", "must lie in [0, 2]");
    }
    if (c.js.size() < 3) rd.fail("js", "need at least 3 dyadic blocks for a fit");
    for (int jj : c.js) {
      if (jj < 1 || jj > 8) rd.fail("js", "block indices must lie in [1, 8]");
    }
    if (std::set<int>(c.js.begin(), c.js.end()).size() != c.js.size()) rd.fail("js", "block indices must be distinct");
    if (c.trials < 8 || c.trials > 1024) rd.fail("trials", "must lie in [8, 1024]");
    if (!(c.tolerance >= 1.0)) rd.fail("tolerance", "variation factor must be >= 1");
  } else if (sc == "energy-drift") {
    check_operators(false);
    rd.numbers("s", c.s_values);
    rd.numbers("times", c.times);
    rd.integer("max_frequency", c.max_frequency);
    if (c.s_values.empty()) rd.fail("s", "at least one regularity required");
    for (double s : c.s_values) {
      if (!(std::abs(s) <= 4.0)) rd.fail("s", "must lie in [-4, 4]");
    }
    if (c.times.empty()) rd.fail("times", "at least one time required");
    for (double t : c.times) {
      if (!(std::abs(t) <= 1e6)) rd.fail("times", "must be finite with |t| <= 1e6");
    }
    if (c.max_frequency < 1 || c.max_frequency > 64) rd.fail("max_frequency", "must lie in [1, 64]");
  }
  if (sc != "invariants" && !(c.tolerance > 0.0)) rd.fail("tolerance", "must be > 0");

  for (const auto& [key, value] : doc.items()) {
    if (!rd.used().count(key)) problems.push_back(key + ": unknown key for scenario '" + sc + "'");
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return c;
}

inline RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({path.string() + ": cannot open file"});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

// ---------------------------------------------------------------------------
// Result rows

struct ResultRow {
  std::string scenario;
  std::optional<double> param;
  std::string observable;
  std::optional<double> measured;
  std::optional<double> predicted;
  std::optional<double> tolerance;
  std::string verdict;  ///< pass, fail or exploratory
  std::string claim;    ///< estimate a pass/fail row is checked against; not written to CSV
};

inline constexpr const char* kResultsHeader = "scenario,param,observable,measured,predicted,tolerance,verdict";
inline constexpr const char* kFitHeader =
    "scenario,observable,slope,intercept,stderr,r_squared,points,predicted,tolerance,verdict";

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_optional(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

/// Label helper, e.g. tag("lq_norm", {"q=4"}) -> "lq_norm[q=4]". No commas.
inline std::string tag(const std::string& name, const std::vector<std::string>& parts) {
  std::string s = name + "[";
  for (std::size_t i = 0; i < parts.size(); ++i) s += (i ? ";" : "") + parts[i];
  return s + "]";
}

inline std::string kv(const std::string& k, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s=%.6g", k.c_str(), v);
  return buf;
}

inline std::string to_csv(const std::vector<ResultRow>& rows) {
  std::string out = std::string(kResultsHeader) + "\n";
  for (const auto& r : rows) {
    out += r.scenario + "," + format_optional(r.param) + "," + r.observable + "," + format_optional(r.measured) +
           "," + format_optional(r.predicted) + "," + format_optional(r.tolerance) + "," + r.verdict + "\n";
  }
  return out;
}

inline std::optional<double> parse_optional(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("trailing characters in number '" + s + "'");
  return v;
}

inline std::vector<ResultRow> parse_results_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader) {
    throw InvalidArgument("results.csv: missing or unexpected header");
  }
  std::vector<ResultRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 7) throw InvalidArgument("results.csv:" + std::to_string(lineno) + ": expected 7 columns");
    try {
      rows.push_back({f[0], parse_optional(f[1]), f[2], parse_optional(f[3]), parse_optional(f[4]),
                      parse_optional(f[5]), f[6], {}});
    } catch (const std::exception& e) {
      throw InvalidArgument("results.csv:" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

struct FitRow {
  std::string scenario;
  std::string observable;
  FitResult fit;
  std::string verdict;
};

/// Log-log fits of every exploratory data series (rows with a parameter),
/// in order of first appearance. A "slope:<observable>" row with a predicted
/// value supplies the prediction and tolerance.
inline std::vector<FitRow> fit_series(const std::vector<ResultRow>& rows) {
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::vector<ScalingPoint>> series;
  std::map<std::pair<std::string, std::string>, std::pair<double, double>> predictions;
  for (const auto& r : rows) {
    if (r.observable.rfind("slope:", 0) == 0) {
      if (r.predicted && r.tolerance) {
        predictions[{r.scenario, r.observable.substr(6)}] = {*r.predicted, *r.tolerance};
      }
      continue;
    }
    if (!r.param || !r.measured || r.verdict != "exploratory") continue;
    const auto key = std::make_pair(r.scenario, r.observable);
    if (!series.count(key)) order.push_back(key);
    series[key].push_back({*r.param, *r.measured});
  }
  std::vector<FitRow> out;
  for (const auto& key : order) {
    const auto& pts = series[key];
    if (pts.size() < 3) continue;
    FitRow row{key.first, key.second, {}, "exploratory"};
    try {
      row.fit = fit_loglog(pts);
    } catch (const InvalidArgument&) {
      continue;  // non-positive data has no log-log fit
    }
    if (const auto it = predictions.find(key); it != predictions.end()) {
      row.fit = row.fit.with_prediction(it->second.first, it->second.second);
      row.verdict = row.fit.within_tolerance() ? "pass" : "fail";
    }
    out.push_back(std::move(row));
  }
  return out;
}

inline std::string fits_to_csv(const std::vector<FitRow>& fits) {
  std::string out = std::string(kFitHeader) + "\n";
  for (const auto& f : fits) {
    out += f.scenario + "," + f.observable + "," + format_double(f.fit.slope) + "," + format_double(f.fit.intercept) +
           "," + format_double(f.fit.stderr_slope) + "," + format_double(f.fit.r_squared) + "," +
           std::to_string(f.fit.points) + "," + format_optional(f.fit.predicted) + "," +
           (f.fit.predicted ? format_double(f.fit.tolerance) : std::string()) + "," + f.verdict + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scenario runners

namespace detail {

class RowSink {
 public:
  RowSink(std::string scenario, std::vector<ResultRow>& rows) : scenario_(std::move(scenario)), rows_(rows) {}

  void data(double param, const std::string& obs, double measured) {
    rows_.push_back({scenario_, param, obs, measured, std::nullopt, std::nullopt, "exploratory", {}});
  }
  void info(const std::string& obs, double measured) {
    rows_.push_back({scenario_, std::nullopt, obs, measured, std::nullopt, std::nullopt, "exploratory", {}});
  }
  /// |measured - predicted| <= tolerance.
  void check(std::optional<double> param, const std::string& obs, double measured, double predicted, double tol,
             const std::string& claim) {
    const bool ok = std::abs(measured - predicted) <= tol;
    rows_.push_back({scenario_, param, obs, measured, predicted, tol, ok ? "pass" : "fail", claim});
  }
  /// Slope row; exploratory when there is no prediction.
  void slope(const std::string& obs, const FitResult& f, const std::string& claim, bool exploratory = false) {
    if (!f.predicted || exploratory) {
      rows_.push_back({scenario_, std::nullopt, "slope:" + obs, f.slope, std::nullopt, std::nullopt, "exploratory", {}});
    } else {
      check(std::nullopt, "slope:" + obs, f.slope, *f.predicted, f.tolerance, claim);
    }
  }
  /// Ratio bound: 1 <= measured <= limit, written as predicted 1 and
  /// tolerance limit.
  void bound(const std::string& obs, double measured, double limit, const std::string& claim) {
    const bool ok = measured >= 1.0 && measured <= limit;
    rows_.push_back({scenario_, std::nullopt, obs, measured, 1.0, limit, ok ? "pass" : "fail", claim});
  }
  void error(const std::string& label, const std::exception& e) {
    rows_.push_back({scenario_, std::nullopt, tag(std::string("error:") + error_class(e), {label}), std::nullopt,
                     std::nullopt, std::nullopt, "fail", e.what()});
  }

 private:
  std::string scenario_;
  std::vector<ResultRow>& rows_;
};

/// Runs one experiment; errors become a failed row and the run continues.
template <class F>
void guarded(RowSink& sink, const std::string& label, F&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    sink.error(label, e);
  }
}

inline void run_bump_scaling(const RunConfig& c, RowSink& sink) {
  const auto profile = make_bump_profile(c.r0);
  const std::string claim = scenarios()[0].claim;
  for (std::size_t i = 0; i < c.q_values.size(); ++i) {
    const double q = c.q_values[i];
    guarded(sink, kv("q", q), [&] {
      const auto r = bump_scaling_experiment(q, c.lambdas, profile, c.tolerance, c.grid_multiplier);
      const auto lq_obs = tag("lq_norm", {kv("q", q)});
      for (const auto& p : r.lq.results) sink.data(p.param, lq_obs, p.value);
      sink.slope(lq_obs, r.lq_fit, claim);
      sink.check(std::nullopt, "r_squared:" + lq_obs, r.lq_fit.r_squared, 1.0, 1e-3, claim);
      if (i == 0) {
        for (const auto& p : r.h2.results) sink.data(p.param, "h2_norm", p.value);
        sink.slope("h2_norm", r.h2_fit, claim);
      }
    });
  }
}

inline void run_sharpness(const RunConfig& c, RowSink& sink) {
  const auto profile = make_bump_profile(c.r0);
  const std::string claim = scenarios()[1].claim;
  for (double s : c.s_values) {
    guarded(sink, kv("s", s), [&] {
      const auto r = sharpness_experiment(s, c.p, c.q, c.lambdas, profile, c.tolerance, c.grid_multiplier);
      const bool exploratory = !r.admissible;
      const auto lq_obs = tag("lq_factor", {kv("s", s)});
      const auto hs_obs = tag("hs_factor", {kv("s", s)});
      const auto q_obs = tag("strichartz_quotient", {kv("s", s)});
      for (std::size_t i = 0; i < c.lambdas.size(); ++i) {
        const double l = r.quotient.results[i].param;
        const double qv = r.quotient.results[i].value;
        sink.data(l, lq_obs, r.lq_values[i]);
        sink.data(l, hs_obs, r.hs_values[i]);
        sink.data(l, q_obs, qv);
      }
      sink.slope(lq_obs, r.lq_fit, claim, exploratory);
      sink.slope(hs_obs, r.hs_fit, claim, exploratory);
      sink.slope(q_obs, r.fit, claim, exploratory);
    });
  }
}

inline void run_dispersion(const RunConfig& c, RowSink& sink) {
  const auto bump = make_partition_bump();
  const std::string claim = scenarios()[2].claim;
  for (const auto& name : c.operators) {
    guarded(sink, name, [&] {
      const auto op = make_operator(name);
      const auto r = dispersion_experiment(op, c.j, bump, c.alpha, c.n_times, c.grid_n, c.tolerance);
      const auto obs = tag("sup_norm", {name, kv("alpha", c.alpha)});
      const auto obs_half = tag("sup_norm", {name, kv("alpha", 0.5 * c.alpha)});
      sink.info(tag("degeneracy_rank", {name}), r.m);
      for (const auto& p : r.sup.results) sink.data(p.param, obs, p.value);
      for (const auto& p : r.sup_half.results) sink.data(p.param, obs_half, p.value);
      sink.slope(obs, r.fit, claim);
      sink.slope(obs_half, r.fit_half, claim);
      sink.check(std::nullopt, tag("slope_stability", {name}), r.stability(), 0.0, c.stability_tolerance, claim);
    });
  }
}

inline void run_random_sweep(const RunConfig& c, RowSink& sink) {
  const std::string claim = scenarios()[3].claim;
  MixedNormSpec spec{c.p, c.q};
  for (const auto& name : c.operators) {
    for (double s : c.s_values) {
      guarded(sink, tag(name, {kv("s", s)}), [&] {
        const auto op = make_operator(name);
        const auto r = random_data_sweep(op, spec, s, c.js, c.trials, c.seed);
        if (!r.all_converged) {
          throw ConvergenceError("random_data_sweep: time quadrature did not converge", 0.0, 0.0);
        }
        const std::vector<std::string> parts{name, kv("p", c.p), kv("q", c.q), kv("s", s)};
        for (std::size_t b = 0; b < c.js.size(); ++b) {
          const auto& qs = r.quotients[b];
          const double h_inv = std::ldexp(1.0, c.js[b]);
          sink.data(h_inv, tag("block_max_quotient", parts), *std::max_element(qs.begin(), qs.end()));
          sink.data(h_inv, tag("block_min_quotient", parts), *std::min_element(qs.begin(), qs.end()));
        }
        sink.slope(tag("block_max_quotient", parts), r.fit, claim, true);
        sink.info(tag("growth", parts), r.growth());
        if (c.admissible() && r.block_max.predicted) {
          // Factor bound: max / min of the block maxima within [1, tolerance].
          sink.bound(tag("variation", parts), r.variation(), c.tolerance, claim);
        } else {
          sink.info(tag("variation", parts), r.variation());
        }
      });
    }
  }
}

/// Seeded random data with |k_i| <= max_frequency per coordinate (torus) or
/// degrees <= max_frequency / 2 (S^3 x S^3, zonal products).
inline SpectralField random_datum(const SignatureOperator& op, int max_frequency, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<ModeId> modes;
  const auto& m = op.manifold;
  if (m.is_flat_torus()) {
    const int d = m.dimension();
    std::vector<int> k(static_cast<std::size_t>(d), -max_frequency);
    while (true) {
      std::vector<ModeId> parts;
      std::size_t at = 0;
      for (const auto& f : m.factors()) {
        const int fd = std::get<Torus>(f).dim;
        parts.push_back(ModeId::torus(std::vector<int>(k.begin() + static_cast<long>(at),
                                                       k.begin() + static_cast<long>(at + fd))));
        at += static_cast<std::size_t>(fd);
      }
      modes.push_back(ModeId::product(parts));
      std::size_t i = 0;
      while (i < k.size() && ++k[i] > max_frequency) k[i++] = -max_frequency;
      if (i == k.size()) break;
    }
  } else {
    const int kmax = std::max(1, max_frequency / 2);
    for (int a = 0; a <= kmax; ++a) {
      for (int b = 0; b <= kmax; ++b) modes.push_back(ModeId::product({ModeId::zonal(a), ModeId::zonal(b)}));
    }
  }
  std::vector<Complex> c(modes.size());
  for (auto& v : c) {
    const double re = g(rng);
    v = Complex(re, g(rng));
  }
  return SpectralField(m, std::move(modes), std::move(c));
}

inline void run_energy_drift(const RunConfig& c, RowSink& sink) {
  const std::string claim = scenarios()[4].claim;
  for (std::size_t oi = 0; oi < c.operators.size(); ++oi) {
    const auto& name = c.operators[oi];
    guarded(sink, name, [&] {
      const auto op = make_operator(name);
      const auto u0 = random_datum(op, c.max_frequency, stream_seed(c.seed, 5, oi));
      for (double s : c.s_values) {
        const double base = sobolev_norm(u0, s);
        for (double t : c.times) {
          const double ratio = sobolev_norm(propagate_exact(op, u0, t), s) / base;
          sink.check(t, tag("hs_ratio", {name, kv("s", s)}), ratio, 1.0, c.tolerance, claim);
        }
      }
    });
  }
}

inline void run_invariants(const RunConfig& c, RowSink& sink) {
  guarded(sink, "partition", [&] {
    const auto phi = make_partition_bump();
    double sum_defect = 0.0, outside = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      const double lambda = std::pow(10.0, 6.0 * i / (n - 1));
      double s = 0.0;
      for (int j = 0; j <= 12; ++j) s += phi(std::ldexp(lambda, -2 * j));
      sum_defect = std::max(sum_defect, std::abs(s - 1.0));
      const double x = std::pow(10.0, -3.0 + 9.0 * i / (n - 1));
      if (x <= 0.25 || x >= 4.0) outside = std::max(outside, std::abs(phi(x)));
    }
    sink.check(std::nullopt, "partition_sum_defect", sum_defect, 0.0, 1e-12,
               "sum_j phi(2^{-2j} lambda) = 1 on 10^4 log-spaced lambda in [1, 10^6]");
    sink.check(std::nullopt, "partition_support_violation", outside, 0.0, 0.0, "supp phi in (1/4, 4)");
  });
  guarded(sink, "haar", [&] {
    const auto grid = haar_grid_s3(6);
    std::mt19937_64 rng(stream_seed(c.seed, 6, 0));
    std::normal_distribution<double> g;
    const std::array<double, 4> v{0.3, -0.5, 0.7, 0.2};
    auto f = [&](const UnitQuaternion& x) {
      const auto& a = x.coords();
      double d = 0.0;
      for (int i = 0; i < 4; ++i) d += v[static_cast<std::size_t>(i)] * a[static_cast<std::size_t>(i)];
      return std::pow(d, 6) + a[0] * a[1] * a[2] * a[2] + a[3] * a[3];
    };
    const double base = grid.integrate(f);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const auto a = UnitQuaternion::normalized(g(rng), g(rng), g(rng), g(rng));
      worst = std::max(worst, std::abs(left_translate(a, grid).integrate(f) - base));
    }
    sink.check(std::nullopt, "haar_translation_defect", worst, 0.0, 1e-8,
               "left translation is an isometry of S^3: quadrature invariant over 100 random translations");
  });
  guarded(sink, "characters", [&] {
    const auto op = make_operator("stationary-s3xs3");
    double worst = 0.0;
    for (int kappa = 0; kappa <= 64; ++kappa) {
      const auto z = ModeId::zonal(kappa);
      worst = std::max(worst, std::abs(symbol_eigenvalue(op, ModeId::product({z, z}))));
    }
    sink.check(std::nullopt, "character_eigenvalue", worst, 0.0, 0.0,
               "characters e_kappa(x.y) are stationary: (Delta_x - Delta_y) eigenvalue 0, kappa <= 64");
  });
  guarded(sink, "galerkin", [&] {
    const auto sig = make_operator("non-elliptic-t2");
    const auto var = VariableTorusOperator::diagonal({TrigPoly::constant(2, 1.0), TrigPoly::constant(2, -1.0)});
    const auto sys = assemble_galerkin(var, 8);
    std::vector<std::vector<int>> ks;
    for (int a = -4; a <= 4; ++a) {
      for (int b = -4; b <= 4; ++b) ks.push_back({a, b});
    }
    std::mt19937_64 rng(stream_seed(c.seed, 6, 1));
    std::normal_distribution<double> g;
    std::vector<Complex> coeffs(ks.size());
    for (auto& v : coeffs) {
      const double re = g(rng);
      v = Complex(re, g(rng));
    }
    const auto f = torus_field(sig.manifold, ks, coeffs);
    const auto c0 = galerkin_coefficients(sys, f);
    double prop = 0.0, drift = 0.0;
    for (double t : {0.1, 0.5, 1.0}) {
      const auto approx = propagate_galerkin(sys, c0, t);
      const auto exact = galerkin_coefficients(sys, propagate_exact(sig, f, t));
      prop = std::max(prop, (exact - approx).cwiseAbs().maxCoeff());
      drift = std::max(drift, std::abs(sys.gram_norm(approx) / sys.gram_norm(c0) - 1.0));
    }
    // Variable density and metric.
    const int d = 2;
    const TrigPoly rho = TrigPoly::constant(d, 1.0) + TrigPoly::cosine(d, 0, 1, 0.2);
    const TrigPoly a11 = TrigPoly::constant(d, 1.0) + TrigPoly::cosine(d, 1, 1, 0.1);
    const TrigPoly a22 = TrigPoly::constant(d, 1.5) + TrigPoly::sine(d, 0, 2, 0.1);
    const TrigPoly a12 = TrigPoly::cosine(d, 0, 1, 0.1);
    const auto vsys = assemble_galerkin(VariableTorusOperator(d, rho, {{a11, a12}, {a12, a22}}), 6);
    Eigen::VectorXcd v0 = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(vsys.size()));
    for (Eigen::Index i = 0; i < v0.size(); ++i) {
      const double re = g(rng);
      v0(i) = Complex(re, g(rng));
    }
    for (double t : {0.1, 0.5, 1.0}) {
      drift = std::max(drift, std::abs(vsys.gram_norm(propagate_galerkin(vsys, v0, t)) / vsys.gram_norm(v0) - 1.0));
    }
    sink.check(std::nullopt, "galerkin_propagation_defect", prop, 0.0, 1e-10,
               "constant-coefficient Galerkin flow equals the exact spectral flow");
    sink.check(std::nullopt, "galerkin_hermitian_defect", std::max(sys.hermitian_defect(), vsys.hermitian_defect()),
               0.0, 1e-10, "Galerkin matrices are Hermitian");
    sink.check(std::nullopt, "gram_norm_drift", drift, 0.0, 1e-10, "Galerkin flow conserves the Gram norm");
  });
  guarded(sink, "degeneracy", [&] {
    const auto identity = VariableTorusOperator::diagonal({TrigPoly::constant(2, 1.0), TrigPoly::constant(2, 1.0)});
    const auto cosine = VariableTorusOperator::diagonal({TrigPoly::constant(2, 1.0), TrigPoly::cosine(2, 0, 1, 1.0)});
    sink.check(std::nullopt, "degeneracy_rank[identity]", degeneracy_check(identity, 64).m, 2.0, 0.0,
               "(H2) rank of the identity metric on T^2");
    sink.check(std::nullopt, "degeneracy_rank[diag(1;cos x)]", degeneracy_check(cosine, 256).m, 1.0, 0.0,
               "(H2) rank of diag(1, cos x) on T^2");
  });
}

}  // namespace detail

struct RunOutput {
  std::vector<ResultRow> rows;
  std::vector<FitRow> fits;

  std::size_t failures() const {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.verdict == "fail";
    for (const auto& f : fits) n += f.verdict == "fail";
    return n;
  }
  int exit_code() const { return failures() == 0 ? kExitPass : kExitFail; }
};

/// Runs every experiment of the configuration. Lower-level errors become
/// failed rows; the remaining experiments still run.
inline RunOutput execute(const RunConfig& c) {
  RunOutput out;
  detail::RowSink sink(c.scenario, out.rows);
  if (c.scenario == "bump-scaling") detail::run_bump_scaling(c, sink);
  else if (c.scenario == "sharpness") detail::run_sharpness(c, sink);
  else if (c.scenario == "dispersion") detail::run_dispersion(c, sink);
  else if (c.scenario == "random-sweep") detail::run_random_sweep(c, sink);
  else if (c.scenario == "energy-drift") detail::run_energy_drift(c, sink);
  else if (c.scenario == "invariants") detail::run_invariants(c, sink);
  else throw ConfigError({"scenario: unknown scenario '" + c.scenario + "'"});
  out.fits = fit_series(out.rows);
  return out;
}

inline std::string report(const RunConfig& c, const RunOutput& out) {
  std::ostringstream s;
  const auto* info = find_scenario(c.scenario);
  s << "scenario: " << c.scenario << "\n";
  s << "seed: " << c.seed << "\n";
  s << "claim: " << info->claim << "\n";
  s << "prediction: " << info->prediction << "\n";
  if (!c.admissible()) s << "note: (p, q) is not admissible; all verdicts are exploratory\n";
  s << "\nfits\n";
  for (const auto& f : out.fits) {
    s << "  " << f.observable << ": slope " << format_double(f.fit.slope) << " +- "
      << format_double(f.fit.stderr_slope) << ", R^2 " << format_double(f.fit.r_squared);
    if (f.fit.predicted) s << ", predicted " << format_double(*f.fit.predicted) << " +- " << format_double(f.fit.tolerance);
    s << " -> " << f.verdict << "\n";
  }
  s << "\nchecks\n";
  for (const auto& r : out.rows) {
    if (r.verdict == "exploratory") continue;
    s << "  " << r.verdict << "  " << r.observable;
    if (r.param) s << " at " << format_double(*r.param);
    if (r.measured) s << ": measured " << format_double(*r.measured);
    if (r.predicted) s << ", predicted " << format_double(*r.predicted) << " +- " << format_double(*r.tolerance);
    s << "\n    " << r.claim << "\n";
  }
  s << "\noverall: " << (out.failures() == 0 ? "PASS" : "FAIL") << " (" << out.failures() << " failed)\n";
  return s.str();
}

/// Writes config-echo.json, results.csv, fit.csv and report.txt.
inline void write_outputs(const std::filesystem::path& dir, const RunConfig& c, const RunOutput& out) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  auto put = [&](const char* name, const std::string& text) {
    std::ofstream f(dir / name, std::ios::binary);
    f << text;
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
  };
  put("config-echo.json", c.echo().dump(2) + "\n");
  put("results.csv", to_csv(out.rows));
  put("fit.csv", fits_to_csv(out.fits));
  put("report.txt", report(c, out));
}

}  // namespace slab::cli
