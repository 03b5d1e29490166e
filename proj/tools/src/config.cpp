#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "anensolar/error.hpp"

namespace anensolar::cli {

namespace {

constexpr const char* kDefaults = R"({
  "output": "runs/default",
  "parallel": 1,
  "verbosity": 0,
  "seed": 42,
  "data": {"forecasts": "", "analysis": ""},
  "synth": {
    "start": 1514764800, "days": 60, "init_hour": 0, "lead_hours": [],
    "rows": 3, "cols": 4, "lat": [32.0, 44.0], "lon": [-110.0, -85.0],
    "terrain": "flat", "transmittance": 0.75, "ar_phi": 0.9, "cloud_noise": 0.35,
    "errors": {"dswrf": {"bias": 0.25, "noise": 0.12}, "tcc": {"bias": 0.0, "noise": 12.0},
               "2t": {"bias": 0.0, "noise": 1.0}},
    "regimes": []
  },
  "anen": {
    "members": 21, "half_window": 1, "weights": [], "predictors": ["dswrf", "tcc", "2t"],
    "operational": true, "allow_partial": false, "sigma_epsilon": 1e-12,
    "search_days": [0, 45], "test_days": [45, 60], "samples": "all",
    "weights_file": "", "locations": "", "write_distances": true
  },
  "simulate": {"modules": ["SP128"], "capacity": 10000.0, "tilt": 0.0, "azimuth": 180.0},
  "verify": {
    "grouping": "lead", "align_solar_noon": true, "noon_slot": 12, "region_map": "",
    "significance_level": 0.05
  },
  "cluster": {"regimes": 3},
  "optimize": {
    "strategy": "RB", "step": 0.25, "exclude_unit_vectors": false, "total_samples": 10,
    "validation_days": 10, "nn_lat_spacing": 4.5, "nn_lon_spacing": 3.5
  },
  "workflow": {"worker_budget": 1, "max_retries": 3}
})";

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

Json::json_pointer pointer_of(const std::string& dotted) {
  std::string p;
  for (const auto& part : split(dotted, '.')) p += "/" + part;
  return Json::json_pointer(p);
}

void unknown_keys(const Json& cfg, const Json& defaults, const std::string& prefix,
                  std::vector<std::string>& problems) {
  if (!cfg.is_object() || !defaults.is_object()) return;
  for (const auto& [key, value] : cfg.items()) {
    const std::string name = prefix.empty() ? key : prefix + "." + key;
    if (!defaults.contains(key)) {
      problems.push_back(name + ": unknown key");
      continue;
    }
    const auto& d = defaults.at(key);
    // empty default objects are free-form maps
    if (d.is_object() && !d.empty()) unknown_keys(value, d, name, problems);
  }
}

/// Typed access that records a problem instead of throwing.
class Reader {
 public:
  Reader(const Json& cfg, std::vector<std::string>& problems) : cfg_(cfg), problems_(problems) {}

  const Json& node(const std::string& key) {
    static const Json null;
    const auto ptr = pointer_of(key);
    if (!cfg_.contains(ptr)) {
      problems_.push_back(key + ": missing");
      return null;
    }
    return cfg_.at(ptr);
  }

  template <class T>
  T get(const std::string& key) {
    const auto& node = this->node(key);
    if (node.is_null()) return T{};
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!node.is_boolean()) throw std::invalid_argument("");
      } else if constexpr (std::is_arithmetic_v<T>) {
        if (!node.is_number()) throw std::invalid_argument("");
        if constexpr (std::is_unsigned_v<T>) {
          if (node.get<double>() < 0) {
            problems_.push_back(key + ": must be >= 0");
            return T{};
          }
        }
        if constexpr (std::is_integral_v<T>) {
          const double v = node.get<double>();
          if (v != std::floor(v)) throw std::invalid_argument("");
        }
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!node.is_string()) throw std::invalid_argument("");
      }
      return node.get<T>();
    } catch (const std::exception&) {
      problems_.push_back(key + ": expected " + type_name<T>());
      return T{};
    }
  }

  /// Array of numbers, or a comma-separated string of numbers.
  std::vector<double> numbers(const std::string& key) {
    const auto& node = this->node(key);
    std::vector<double> out;
    if (node.is_null()) return out;
    try {
      if (node.is_string()) {
        for (const auto& part : split(node.get<std::string>(), ',')) {
          std::size_t used = 0;
          out.push_back(std::stod(part, &used));
          if (used != part.size()) throw std::invalid_argument("");
        }
      } else {
        out = node.get<std::vector<double>>();
      }
    } catch (const std::exception&) {
      problems_.push_back(key + ": expected a list of numbers");
      out.clear();
    }
    return out;
  }

  /// Array of strings, or a comma-separated string.
  std::vector<std::string> strings(const std::string& key) {
    const auto& node = this->node(key);
    if (node.is_null()) return {};
    try {
      if (node.is_string()) return split(node.get<std::string>(), ',');
      return node.get<std::vector<std::string>>();
    } catch (const std::exception&) {
      problems_.push_back(key + ": expected a list of strings");
      return {};
    }
  }

  IndexRange range(const std::string& key) {
    const auto v = numbers(key);
    if (v.size() != 2 || v[0] < 0 || v[1] <= v[0] || v[0] != std::floor(v[0]) ||
        v[1] != std::floor(v[1])) {
      problems_.push_back(key + ": expected [begin, end) with 0 <= begin < end");
      return {};
    }
    return {static_cast<std::size_t>(v[0]), static_cast<std::size_t>(v[1])};
  }

  fs::path existing_path(const std::string& key) {
    const auto s = get<std::string>(key);
    if (!s.empty() && !fs::exists(s)) problems_.push_back(key + ": file '" + s + "' does not exist");
    return s;
  }

 private:
  template <class T>
  static std::string type_name() {
    if constexpr (std::is_same_v<T, bool>) return "true or false";
    else if constexpr (std::is_integral_v<T>) return "an integer";
    else if constexpr (std::is_arithmetic_v<T>) return "a number";
    else return "a string";
  }

  const Json& cfg_;
  std::vector<std::string>& problems_;
};

ErrorModel error_model(const Json& node, const std::string& key, std::vector<std::string>& problems) {
  ErrorModel e;
  if (!node.is_object()) {
    problems.push_back(key + ": expected {\"bias\": x, \"noise\": y}");
    return e;
  }
  for (const auto& [k, v] : node.items()) {
    if ((k != "bias" && k != "noise") || !v.is_number()) {
      problems.push_back(key + "." + k + ": expected bias or noise as a number");
      continue;
    }
    (k == "bias" ? e.bias : e.noise) = v.get<double>();
  }
  return e;
}

std::map<std::string, ErrorModel> error_map(const Json& node, const std::string& key,
                                            std::vector<std::string>& problems) {
  std::map<std::string, ErrorModel> out;
  if (!node.is_object()) {
    problems.push_back(key + ": expected an object keyed by variable");
    return out;
  }
  for (const auto& [var, e] : node.items()) out[var] = error_model(e, key + "." + var, problems);
  return out;
}

double ridge(double lat, double lon) {
  // a north-south ridge in the western third of the box
  (void)lat;
  return std::max(0.0, 2500.0 - 120.0 * std::abs(lon + 105.0) * std::abs(lon + 105.0));
}

}  // namespace

const Json& default_config() {
  static const Json d = Json::parse(kDefaults);
  return d;
}

void apply_override(Json& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(Errc::invalid_argument, "override '" + assignment + "' is not key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  cfg[pointer_of(key)] = value;
}

Json load_config(const std::optional<fs::path>& file, const std::vector<std::string>& sets,
                 char** envp) {
  Json cfg = default_config();
  if (file) {
    std::ifstream in(*file);
    if (!in) throw Error(Errc::io_failure, "cannot open config " + file->string());
    std::stringstream ss;
    ss << in.rdbuf();
    Json user;
    try {
      user = Json::parse(ss.str(), nullptr, true, true);
    } catch (const Json::parse_error& e) {
      throw Error(Errc::invalid_argument, "config " + file->string() + ": " + e.what());
    }
    if (!user.is_object()) throw Error(Errc::invalid_argument, "config root must be an object");
    cfg.merge_patch(user);
  }
  for (char** e = envp; e && *e; ++e) {
    const std::string entry = *e;
    static const std::string prefix = "ANENSOLAR_";
    if (entry.rfind(prefix, 0) != 0) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    std::string key = lower(entry.substr(prefix.size(), eq - prefix.size()));
    for (std::size_t p; (p = key.find("__")) != std::string::npos;) key.replace(p, 2, ".");
    apply_override(cfg, key + "=" + entry.substr(eq + 1));
  }
  for (const auto& s : sets) apply_override(cfg, s);
  return cfg;
}

RunConfig resolve(const Json& cfg, const std::optional<fs::path>& out_override,
                  std::optional<std::size_t> parallel_override) {
  std::vector<std::string> problems;
  unknown_keys(cfg, default_config(), "", problems);
    Reader r(cfg, problems);
  RunConfig rc;

  rc.output = out_override ? *out_override : fs::path(r.get<std::string>("output"));
  if (rc.output.empty()) problems.push_back("output: must not be empty");
  rc.parallel = parallel_override ? *parallel_override : r.get<std::size_t>("parallel");
  if (rc.parallel < 1) problems.push_back("parallel: must be >= 1");
  rc.verbosity = r.get<int>("verbosity");
  rc.seed = r.get<std::uint64_t>("seed");

  const auto forecasts = r.get<std::string>("data.forecasts");
  const auto analysis = r.get<std::string>("data.analysis");
  rc.forecasts = forecasts.empty() ? rc.output / "forecasts.anen" : fs::path(forecasts);
  rc.analysis = analysis.empty() ? rc.output / "analysis.anen" : fs::path(analysis);

  // synth
  auto& sc = rc.synth.config;
  sc.seed = rc.seed;
  sc.start = r.get<std::int64_t>("synth.start");
  sc.days = r.get<std::size_t>("synth.days");
  sc.init_hour = r.get<int>("synth.init_hour");
  for (double h : r.numbers("synth.lead_hours")) sc.lead_hours.push_back(static_cast<int>(h));
  sc.transmittance = r.get<double>("synth.transmittance");
  sc.ar_phi = r.get<double>("synth.ar_phi");
  sc.cloud_noise = r.get<double>("synth.cloud_noise");
  sc.errors = error_map(r.node("synth.errors"), "synth.errors", problems);
  sc.parallel = rc.parallel;
  rc.synth.rows = r.get<std::size_t>("synth.rows");
  rc.synth.cols = r.get<std::size_t>("synth.cols");
  if (rc.synth.rows < 1 || rc.synth.cols < 1) problems.push_back("synth.rows/cols: must be >= 1");
  const auto lat = r.numbers("synth.lat"), lon = r.numbers("synth.lon");
  if (lat.size() != 2 || lat[0] < -90 || lat[1] > 90) {
    problems.push_back("synth.lat: expected [south, north] within [-90, 90]");
  } else {
    rc.synth.lat0 = lat[0];
    rc.synth.lat1 = lat[1];
  }
  if (lon.size() != 2 || lon[0] < -180 || lon[1] > 180) {
    problems.push_back("synth.lon: expected [west, east] within [-180, 180]");
  } else {
    rc.synth.lon0 = lon[0];
    rc.synth.lon1 = lon[1];
  }
  rc.synth.terrain = r.get<std::string>("synth.terrain");
  if (rc.synth.terrain != "flat" && rc.synth.terrain != "ridge") {
    problems.push_back("synth.terrain: must be 'flat' or 'ridge'");
  }
  const auto& regimes = r.node("synth.regimes");
  if (!regimes.is_array()) {
    problems.push_back("synth.regimes: expected a list");
  } else {
    for (std::size_t k = 0; k < regimes.size(); ++k) {
      const std::string key = "synth.regimes[" + std::to_string(k) + "]";
      const auto& node = regimes[k];
      SynthRegime reg;
      double min_elev = -1e9;
      if (!node.is_object()) {
        problems.push_back(key + ": expected an object");
        continue;
      }
      for (const auto& [field, v] : node.items()) {
        if (field == "cloud_offset" && v.is_number()) reg.cloud_offset = v.get<double>();
        else if (field == "min_elevation" && v.is_number()) min_elev = v.get<double>();
        else if (field == "errors") reg.errors = error_map(v, key + ".errors", problems);
        else problems.push_back(key + "." + field + ": unknown key or wrong type");
      }
      sc.regimes.push_back(reg);
      rc.synth.regime_min_elevation.push_back(min_elev);
    }
  }
  if (problems.empty()) {
    try {
      auto probe = sc;
      probe.locations = {{0, 0.0, 0.0, 0.0}};
      probe.validate();
    } catch (const Error& e) {
      std::string msg = e.what();
      for (const auto& line : split(msg, '\n')) {
        auto first = line.find_first_not_of(' ');
        if (first != std::string::npos && line.find("invalid synth config") == std::string::npos)
          problems.push_back("synth." + line.substr(first));
      }
    }
  }

  // anen
  rc.anen.members = r.get<std::size_t>("anen.members");
  if (rc.anen.members < 1) problems.push_back("anen.members: must be >= 1");
  rc.anen.half_window = r.get<std::size_t>("anen.half_window");
  rc.anen.operational = r.get<bool>("anen.operational");
  rc.anen.allow_partial = r.get<bool>("anen.allow_partial");
  rc.anen.sigma_epsilon = r.get<double>("anen.sigma_epsilon");
  if (!(rc.anen.sigma_epsilon > 0)) problems.push_back("anen.sigma_epsilon: must be > 0");
  rc.predictors = r.strings("anen.predictors");
  if (rc.predictors.empty()) problems.push_back("anen.predictors: at least one predictor required");
  const auto weights = r.numbers("anen.weights");
  if (weights.empty()) {
    if (!rc.predictors.empty()) rc.anen.weights = WeightVector::uniform(rc.predictors.size());
  } else {
    double sum = 0;
    bool ok = true;
    for (double w : weights) {
      sum += w;
      ok &= std::isfinite(w) && w >= 0;
    }
    if (!ok) problems.push_back("anen.weights: every weight must be finite and >= 0");
    if (std::abs(sum - 1.0) > kWeightSumTolerance) {
      std::ostringstream m;
      m << "anen.weights: must sum to 1 (got " << sum << ")";
      problems.push_back(m.str());
    }
    if (weights.size() != rc.predictors.size()) {
      problems.push_back("anen.weights: " + std::to_string(weights.size()) + " weights for " +
                         std::to_string(rc.predictors.size()) + " predictors");
    }
    if (ok && std::abs(sum - 1.0) <= kWeightSumTolerance) rc.anen.weights = WeightVector(weights);
  }
  rc.search = r.range("anen.search_days");
  rc.test = r.range("anen.test_days");
  if (!rc.anen.operational && rc.test.begin < rc.search.end && rc.search.begin < rc.test.end) {
    problems.push_back("anen.test_days: overlaps anen.search_days outside operational mode");
  }
  if (sc.days > 0 && (rc.search.end > sc.days || rc.test.end > sc.days) &&
      r.get<std::string>("data.forecasts").empty()) {
    problems.push_back("anen.search_days/test_days: exceed synth.days");
  }
  rc.samples = r.get<std::string>("anen.samples");
  if (rc.samples != "all" && rc.samples != "nn" && rc.samples != "rb") {
    problems.push_back("anen.samples: must be 'all', 'nn' or 'rb'");
  }
  rc.weights_file = r.existing_path("anen.weights_file");
  rc.locations_file = r.existing_path("anen.locations");
  rc.write_distances = r.get<bool>("anen.write_distances");

  // simulate
  rc.modules = r.strings("simulate.modules");
  if (rc.modules.empty()) problems.push_back("simulate.modules: at least one module required");
  for (const auto& m : rc.modules) {
    try {
      find_module(bundled_module_catalog(), m);
    } catch (const Error&) {
      problems.push_back("simulate.modules: unknown module '" + m + "'");
    }
  }
  rc.system.capacity = r.get<double>("simulate.capacity");
  rc.system.tilt = r.get<double>("simulate.tilt");
  rc.system.azimuth = r.get<double>("simulate.azimuth");
  if (!(rc.system.capacity > 0)) problems.push_back("simulate.capacity: must be > 0");
  if (!(rc.system.tilt >= 0 && rc.system.tilt <= 90)) problems.push_back("simulate.tilt: must lie in [0, 90]");

  // verify
  try {
    rc.grouping = parse_grouping(r.get<std::string>("verify.grouping"));
  } catch (const Error& e) {
    problems.push_back(std::string("verify.grouping: ") + e.what());
  }
  rc.align_noon = r.get<bool>("verify.align_solar_noon");
  rc.noon_slot = r.get<std::size_t>("verify.noon_slot");
  rc.region_map = r.existing_path("verify.region_map");
  if (rc.grouping == Grouping::region && rc.region_map.empty()) {
    problems.push_back("verify.region_map: required for region grouping");
  }
  if (rc.grouping == Grouping::daypart && !rc.align_noon) {
    problems.push_back("verify.align_solar_noon: required for daypart grouping");
  }
  rc.significance_level = r.get<double>("verify.significance_level");
  if (!(rc.significance_level > 0 && rc.significance_level < 1)) {
    problems.push_back("verify.significance_level: must lie in (0, 1)");
  }

  rc.regimes = r.get<std::size_t>("cluster.regimes");
  if (rc.regimes < 1) problems.push_back("cluster.regimes: must be >= 1");

  // optimize
  try {
    rc.strategy = parse_strategy(r.get<std::string>("optimize.strategy"));
  } catch (const Error& e) {
    problems.push_back(std::string("optimize.strategy: ") + e.what());
  }
  rc.step = r.get<double>("optimize.step");
  if (!(rc.step > 0 && rc.step <= 1) ||
      std::abs(1.0 / rc.step - std::round(1.0 / rc.step)) > 1e-9 * std::round(1.0 / rc.step)) {
    problems.push_back("optimize.step: 1/step must be a positive integer");
  }
  rc.exclude_unit_vectors = r.get<bool>("optimize.exclude_unit_vectors");
  rc.total_samples = r.get<std::size_t>("optimize.total_samples");
  if (rc.total_samples < 1) problems.push_back("optimize.total_samples: must be >= 1");
  rc.validation_days = r.get<std::size_t>("optimize.validation_days");
  if (rc.validation_days < 1 || rc.validation_days >= rc.search.size()) {
    problems.push_back("optimize.validation_days: must lie in [1, search length)");
  }
  rc.nn_lat_spacing = r.get<double>("optimize.nn_lat_spacing");
  rc.nn_lon_spacing = r.get<double>("optimize.nn_lon_spacing");
  if (!(rc.nn_lat_spacing > 0 && rc.nn_lon_spacing > 0)) {
    problems.push_back("optimize.nn_lat_spacing/nn_lon_spacing: must be > 0");
  }

  rc.worker_budget = r.get<std::size_t>("workflow.worker_budget");
  if (rc.worker_budget < 1) problems.push_back("workflow.worker_budget: must be >= 1");
  rc.max_retries = r.get<int>("workflow.max_retries");
  if (rc.max_retries < 0) problems.push_back("workflow.max_retries: must be >= 0");

  if (!problems.empty()) {
    std::string msg = "invalid configuration (" + std::to_string(problems.size()) + " problems)";
    for (const auto& p : problems) msg += "\n  " + p;
    throw Error(Errc::invalid_argument, msg);
  }

  if (rc.synth.terrain == "ridge") {
    sc.locations = grid_locations(rc.synth.rows, rc.synth.cols, rc.synth.lat0, rc.synth.lat1,
                                  rc.synth.lon0, rc.synth.lon1, ridge);
  } else {
    sc.locations = grid_locations(rc.synth.rows, rc.synth.cols, rc.synth.lat0, rc.synth.lat1,
                                  rc.synth.lon0, rc.synth.lon1);
  }
  if (!sc.regimes.empty()) {
    for (const auto& loc : sc.locations) {
      std::size_t reg = 0;
      for (std::size_t k = 0; k < rc.synth.regime_min_elevation.size(); ++k)
        if (loc.elevation >= rc.synth.regime_min_elevation[k]) reg = k;
      sc.regime_of_location.push_back(reg);
    }
  }
  return rc;
}

}  // namespace anensolar::cli
