#include "anensolar/weights.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "anensolar/error.hpp"
#include "anensolar/parallel.hpp"
#include "anensolar/random.hpp"

namespace anensolar {

WeightGrid::WeightGrid(std::size_t predictors, std::size_t divisions,
                       bool exclude_unit_vectors, std::vector<std::vector<int>> parts)
    : predictors_(predictors),
      divisions_(divisions),
      exclude_unit_vectors_(exclude_unit_vectors),
      parts_(std::move(parts)) {}

WeightVector WeightGrid::vector(std::size_t k) const {
  const auto& p = parts_.at(k);
  std::vector<double> w(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    w[i] = static_cast<double>(p[i]) / static_cast<double>(divisions_);
  }
  return WeightVector(std::move(w));
}

std::vector<WeightVector> WeightGrid::vectors() const {
  std::vector<WeightVector> out;
  out.reserve(parts_.size());
  for (std::size_t k = 0; k < parts_.size(); ++k) out.push_back(vector(k));
  return out;
}

namespace {

void compose(std::size_t slot, int remaining, std::vector<int>& current,
             std::vector<std::vector<int>>& out) {
  if (slot + 1 == current.size()) {
    current[slot] = remaining;
    out.push_back(current);
    return;
  }
  for (int v = remaining; v >= 0; --v) {
    current[slot] = v;
    compose(slot + 1, remaining - v, current, out);
  }
}

}  // namespace

WeightGrid enumerate_weights(std::size_t predictors, double step, bool exclude_unit_vectors) {
  if (predictors < 1) throw Error(Errc::invalid_argument, "need at least one predictor");
  if (!(step > 0.0 && step <= 1.0)) {
    throw Error(Errc::invalid_argument, "weight step must lie in (0, 1]");
  }
  const double inv = 1.0 / step;
  const double rounded = std::round(inv);
  if (std::abs(inv - rounded) > 1e-9 * rounded) {
    throw Error(Errc::invalid_argument, "1/step must be an integer");
  }
  const int divisions = static_cast<int>(rounded);
  std::vector<std::vector<int>> parts;
  std::vector<int> current(predictors, 0);
  compose(0, divisions, current, parts);
  if (exclude_unit_vectors) {
    std::erase_if(parts, [&](const std::vector<int>& p) {
      return std::find(p.begin(), p.end(), divisions) != p.end();
    });
  }
  return WeightGrid(predictors, static_cast<std::size_t>(divisions), exclude_unit_vectors,
                    std::move(parts));
}

SampleAssignment nn_sample_grid(const LocationSet& locations, double lat_spacing,
                                double lon_spacing) {
  if (locations.size() == 0) throw Error(Errc::invalid_argument, "no locations to tile");
  if (!(lat_spacing > 0 && lon_spacing > 0)) {
    throw Error(Errc::invalid_argument, "tile spacing must be positive");
  }
  double lat0 = 90.0, lon0 = 180.0;
  for (const auto& l : locations.items()) {
    lat0 = std::min(lat0, l.latitude);
    lon0 = std::min(lon0, l.longitude);
  }
  std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>> tiles;
  for (const auto& l : locations.items()) {
    const auto r = static_cast<std::int64_t>(std::floor((l.latitude - lat0) / lat_spacing));
    const auto c = static_cast<std::int64_t>(std::floor((l.longitude - lon0) / lon_spacing));
    tiles[{r, c}].push_back(l.id);
  }
  SampleAssignment a;
  a.sample_of_location.assign(locations.size(), 0);
  for (const auto& [key, ids] : tiles) {
    const std::size_t s = a.members.size();
    double clat = 0, clon = 0;
    for (auto id : ids) {
      clat += locations[id].latitude;
      clon += locations[id].longitude;
      a.sample_of_location[id] = s;
    }
    clat /= static_cast<double>(ids.size());
    clon /= static_cast<double>(ids.size());
    std::size_t rep = ids.front();
    double best = std::numeric_limits<double>::infinity();
    for (auto id : ids) {
      const double dy = locations[id].latitude - clat;
      const double dx = locations[id].longitude - clon;
      const double d = dx * dx + dy * dy;
      if (d < best) {
        best = d;
        rep = id;
      }
    }
    a.representative.push_back(rep);
    a.members.push_back(ids);
    a.tile.push_back(key);
  }
  return a;
}

std::vector<std::vector<std::size_t>> rb_sample_points(const RegimeClustering& clustering,
                                                       std::size_t total_samples,
                                                       std::uint64_t seed) {
  const auto members = clustering.members();
  const double n = static_cast<double>(clustering.labels.size());
  std::vector<std::vector<std::size_t>> out(members.size());
  for (std::size_t r = 0; r < members.size(); ++r) {
    const double share = static_cast<double>(members[r].size()) / n;
    std::size_t count = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(share * static_cast<double>(total_samples))));
    count = std::min(count, members[r].size());
    auto pool = members[r];
    Rng rng(derive_seed(seed, r));
    rng.shuffle(pool);
    pool.resize(count);
    out[r] = std::move(pool);
  }
  return out;
}

SampleRegions regions_from(const SampleAssignment& a) {
  SampleRegions r;
  r.region_of_location = a.sample_of_location;
  for (auto rep : a.representative) r.samples.push_back({rep});
  return r;
}

SampleRegions regions_from(const RegimeClustering& c,
                           const std::vector<std::vector<std::size_t>>& samples) {
  if (samples.size() != c.regimes()) {
    throw Error(Errc::dimension_mismatch, "one sample list per regime required");
  }
  SampleRegions r;
  for (int label : c.labels) r.region_of_location.push_back(static_cast<std::size_t>(label - 1));
  r.samples = samples;
  return r;
}

Strategy parse_strategy(std::string_view s) {
  if (s == "EW" || s == "ew") return Strategy::ew;
  if (s == "NN" || s == "nn") return Strategy::nn;
  if (s == "RB" || s == "rb") return Strategy::rb;
  throw Error(Errc::invalid_argument, "strategy must be one of EW, NN, RB");
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::ew: return "EW";
    case Strategy::nn: return "NN";
    case Strategy::rb: return "RB";
  }
  return "?";
}

OptimizationResult optimize_weights(const WeightGrid& grid, const ScoreFn& score,
                                    Strategy strategy, const SampleRegions* regions,
                                    std::size_t locations, std::size_t parallel) {
  if (grid.empty()) throw Error(Errc::empty_range, "weight grid is empty");
  OptimizationResult result;
  if (strategy == Strategy::ew) {
    result.per_location.assign(locations, WeightVector::uniform(grid.predictors()));
    return result;
  }
  if (!regions) throw Error(Errc::invalid_argument, "NN/RB optimization needs sample regions");
  if (regions->region_of_location.size() != locations) {
    throw Error(Errc::dimension_mismatch, "region assignment does not cover all locations");
  }

  // All sample locations, deduplicated; evaluated once per grid vector.
  std::vector<std::size_t> sample_list;
  for (const auto& s : regions->samples) sample_list.insert(sample_list.end(), s.begin(), s.end());
  std::sort(sample_list.begin(), sample_list.end());
  sample_list.erase(std::unique(sample_list.begin(), sample_list.end()), sample_list.end());

  std::vector<std::vector<double>> scores(grid.size());
  parallel_for(grid.size(), parallel, [&](std::size_t k) {
    scores[k] = score(grid.vector(k), sample_list);
    if (scores[k].size() != sample_list.size()) {
      throw Error(Errc::dimension_mismatch, "score function returned wrong length");
    }
  });

  auto pos = [&](std::size_t loc) {
    return static_cast<std::size_t>(
        std::lower_bound(sample_list.begin(), sample_list.end(), loc) - sample_list.begin());
  };
  const std::size_t nr = regions->samples.size();
  result.region_choice.assign(nr, 0);
  result.region_score.assign(nr, std::numeric_limits<double>::infinity());
  for (std::size_t r = 0; r < nr; ++r) {
    const auto& samples = regions->samples[r];
    if (samples.empty()) throw Error(Errc::invalid_argument, "region without samples");
    for (std::size_t k = 0; k < grid.size(); ++k) {
      double total = 0;
      for (auto s : samples) {
        const double v = scores[k][pos(s)];
        total += std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
      }
      const double mean = total / static_cast<double>(samples.size());
      if (mean < result.region_score[r]) {
        result.region_score[r] = mean;
        result.region_choice[r] = k;
      }
    }
  }
  result.per_location.reserve(locations);
  for (std::size_t l = 0; l < locations; ++l) {
    result.per_location.push_back(grid.vector(result.region_choice.at(regions->region_of_location[l])));
  }
  return result;
}

void write_weights_csv(const WeightTable& weights, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_failure, "cannot open " + path.string());
  out.precision(17);
  out << "location";
  const std::size_t n = weights.empty() ? 0 : weights.front().size();
  for (std::size_t i = 0; i < n; ++i) out << ",w" << (i + 1);
  out << '\n';
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out << l;
    for (double w : weights[l].values()) out << ',' << w;
    out << '\n';
  }
}

WeightTable read_weights_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_failure, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  WeightTable table;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');
    if (std::stoul(field) != table.size()) {
      throw Error(Errc::dimension_mismatch, "weight rows must list locations 0..L-1 in order");
    }
    std::vector<double> w;
    while (std::getline(ss, field, ',')) w.push_back(std::stod(field));
    table.emplace_back(std::move(w));
  }
  return table;
}

void write_assignment_csv(const SampleAssignment& a, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_failure, "cannot open " + path.string());
  out << "location,sample,representative\n";
  for (std::size_t l = 0; l < a.sample_of_location.size(); ++l) {
    const auto s = a.sample_of_location[l];
    out << l << ',' << s << ',' << a.representative[s] << '\n';
  }
}

}  // namespace anensolar
