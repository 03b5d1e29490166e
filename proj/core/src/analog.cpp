#include "anensolar/analog.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "anensolar/error.hpp"
#include "anensolar/io.hpp"
#include "anensolar/parallel.hpp"

namespace anensolar {

WeightVector::WeightVector(std::vector<double> weights) : w_(std::move(weights)) {
  if (w_.empty()) throw Error(Errc::invalid_argument, "weights: empty weight vector");
  double sum = 0.0;
  for (std::size_t i = 0; i < w_.size(); ++i) {
    if (!std::isfinite(w_[i]) || w_[i] < 0.0) {
      throw Error(Errc::invalid_argument,
                  "weights: component " + std::to_string(i) +
                      " must be finite and non-negative");
    }
    sum += w_[i];
  }
  if (std::abs(sum - 1.0) > kWeightSumTolerance) {
    throw Error(Errc::invalid_argument,
                "weights: components sum to " + std::to_string(sum) +
                    ", expected 1");
  }
}

WeightVector WeightVector::uniform(std::size_t n) {
  return WeightVector(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

void AnEnConfig::validate(std::size_t predictor_count) const {
  if (members < 1) throw Error(Errc::invalid_argument, "members must be >= 1");
  if (!(sigma_epsilon > 0.0)) {
    throw Error(Errc::invalid_argument, "sigma_epsilon must be positive");
  }
  if (weights.size() != predictor_count) {
    throw Error(Errc::dimension_mismatch,
                "weights: " + std::to_string(weights.size()) +
                    " weights for " + std::to_string(predictor_count) +
                    " predictors");
  }
}

SigmaTensor compute_sigma(const ForecastTensor& f, IndexRange search) {
  if (search.empty() || search.end > f.init_times.size()) {
    throw Error(Errc::empty_range, "sigma search range empty or out of bounds");
  }
  const std::size_t np = f.predictor_names.size();
  const std::size_t nl = f.locations.size();
  const std::size_t nj = f.lead_times.size();
  SigmaTensor s{Array<3>({np, nl, nj})};
  for (std::size_t p = 0; p < np; ++p) {
    for (std::size_t l = 0; l < nl; ++l) {
      for (std::size_t j = 0; j < nj; ++j) {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t i = search.begin; i < search.end; ++i) {
          const double v = f.values(p, l, i, j);
          if (std::isfinite(v)) {
            sum += v;
            ++n;
          }
        }
        if (n < 2) continue;
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t i = search.begin; i < search.end; ++i) {
          const double v = f.values(p, l, i, j);
          if (std::isfinite(v)) ss += (v - mean) * (v - mean);
        }
        s.values(p, l, j) = std::sqrt(ss / static_cast<double>(n));
      }
    }
  }
  return s;
}

namespace {

// Per-location view of the forecast archive used by the search kernel.
struct Kernel {
  const double* base;         // &values(0, location, 0, 0)
  std::size_t pred_stride;    // elements between predictors
  std::size_t init_stride;    // = lead count
  std::size_t leads;
  std::size_t half_window;
  std::vector<std::size_t> active;  // predictors with nonzero weight, usable sigma
  std::vector<double> scale;        // weight / sigma per active predictor, per lead
                                    // laid out [active][lead]

  double distance(std::size_t target, std::size_t candidate, std::size_t lead) const {
    const std::size_t j0 = lead >= half_window ? lead - half_window : 0;
    const std::size_t j1 = std::min(leads - 1, lead + half_window);
    double total = 0.0;
    for (std::size_t a = 0; a < active.size(); ++a) {
      const double s = scale[a * leads + lead];
      if (s == 0.0) continue;
      const double* row = base + active[a] * pred_stride;
      const double* ft = row + target * init_stride;
      const double* fc = row + candidate * init_stride;
      double sum = 0.0;
      for (std::size_t j = j0; j <= j1; ++j) {
        const double x = ft[j];
        if (std::isnan(x)) continue;
        const double y = fc[j];
        if (std::isnan(y)) return kDisqualified;
        const double d = x - y;
        sum += d * d;
      }
      total += s * std::sqrt(sum);
    }
    return total;
  }
};

Kernel make_kernel(const ForecastTensor& f, const SigmaTensor& sigma,
                   std::span<const double> weights, std::size_t half_window,
                   double eps, std::size_t location) {
  const std::size_t np = f.predictor_names.size();
  const std::size_t nj = f.lead_times.size();
  Kernel k{&f.values.data()[f.values.offset(0, location, 0, 0)],
           f.values.stride(0), f.values.stride(2), nj, half_window, {}, {}};
  for (std::size_t p = 0; p < np; ++p) {
    if (weights[p] == 0.0) continue;
    k.active.push_back(p);
    for (std::size_t j = 0; j < nj; ++j) {
      const double s = sigma.values(p, location, j);
      k.scale.push_back((std::isnan(s) || s < eps) ? 0.0 : weights[p] / s);
    }
  }
  return k;
}

void check_sigma_shape(const ForecastTensor& f, const SigmaTensor& sigma) {
  if (sigma.values.shape() != Array<3>::Shape{f.predictor_names.size(),
                                              f.locations.size(),
                                              f.lead_times.size()}) {
    throw Error(Errc::dimension_mismatch, "sigma shape does not match forecasts");
  }
}

}  // namespace

double similarity(const ForecastTensor& f, const SigmaTensor& sigma,
                  std::span<const double> weights, std::size_t half_window,
                  double sigma_epsilon, std::size_t location,
                  std::size_t target_init, std::size_t candidate_init,
                  std::size_t lead) {
  check_sigma_shape(f, sigma);
  if (weights.size() != f.predictor_names.size()) {
    throw Error(Errc::dimension_mismatch, "weight count does not match predictors");
  }
  // Bounds validation through the checked accessor.
  (void)f.values.offset(0, location, target_init, lead);
  (void)f.values.offset(0, location, candidate_init, lead);
  auto k = make_kernel(f, sigma, weights, half_window, sigma_epsilon, location);
  return k.distance(target_init, candidate_init, lead);
}

double similarity(const ForecastTensor& f, const SigmaTensor& sigma,
                  const AnEnConfig& cfg, std::size_t location,
                  std::size_t target_init, std::size_t candidate_init,
                  std::size_t lead) {
  return similarity(f, sigma, cfg.weights.values(), cfg.half_window,
                    cfg.sigma_epsilon, location, target_init, candidate_init,
                    lead);
}

AnalogIndexSet::AnalogIndexSet(std::size_t locations,
                               std::vector<std::size_t> test_inits,
                               std::size_t leads, std::size_t members)
    : locations_(locations),
      test_inits_(std::move(test_inits)),
      leads_(leads),
      members_(members),
      slots_(locations * test_inits_.size() * leads * members),
      counts_(locations * test_inits_.size() * leads, 0) {}

std::size_t AnalogIndexSet::cell(std::size_t location, std::size_t test,
                                 std::size_t lead) const {
  if (location >= locations_ || test >= test_inits_.size() || lead >= leads_) {
    throw std::out_of_range("analog index cell out of range");
  }
  return (location * test_inits_.size() + test) * leads_ + lead;
}

std::span<const Analog> AnalogIndexSet::at(std::size_t location, std::size_t test,
                                           std::size_t lead) const {
  const auto c = cell(location, test, lead);
  return {slots_.data() + c * members_, counts_[c]};
}

void AnalogIndexSet::assign(std::size_t location, std::size_t test,
                            std::size_t lead, std::span<const Analog> analogs) {
  const auto c = cell(location, test, lead);
  if (analogs.size() > members_) {
    throw Error(Errc::invalid_argument, "more analogs than members");
  }
  std::copy(analogs.begin(), analogs.end(), slots_.begin() + c * members_);
  counts_[c] = analogs.size();
}

AnalogIndexSet search_analogs(const ForecastTensor& f, const SigmaTensor& sigma,
                              const AnEnConfig& cfg, IndexRange test,
                              IndexRange search, const SearchOptions& options) {
  f.validate();
  cfg.validate(f.predictor_names.size());
  check_sigma_shape(f, sigma);
  const std::size_t ni = f.init_times.size();
  if (search.empty()) throw Error(Errc::empty_range, "search range is empty");
  if (search.end > ni || test.end > ni) {
    throw Error(Errc::invalid_argument, "init range exceeds the forecast init axis");
  }
  if (!cfg.operational && test.begin < search.end && search.begin < test.end) {
    throw Error(Errc::invalid_argument,
                "test and search ranges overlap outside operational mode");
  }
  const WeightTable* table = options.location_weights;
  if (table && table->size() != 1 && table->size() != f.locations.size()) {
    throw Error(Errc::dimension_mismatch, "location weight table size mismatch");
  }
  if (table) {
    for (const auto& w : *table) {
      if (w.size() != f.predictor_names.size()) {
        throw Error(Errc::dimension_mismatch, "location weight length mismatch");
      }
    }
  }

  std::vector<std::size_t> tests(test.size());
  std::iota(tests.begin(), tests.end(), test.begin);
  const std::size_t nj = f.lead_times.size();
  AnalogIndexSet out(f.locations.size(), tests, nj, cfg.members);

  std::vector<std::size_t> locs = options.only_locations;
  if (locs.empty()) {
    locs.resize(f.locations.size());
    std::iota(locs.begin(), locs.end(), 0);
  }

  parallel_for(locs.size(), options.parallel, [&](std::size_t k) {
    const std::size_t l = locs.at(k);
    const WeightVector& w =
        table ? (*table)[table->size() == 1 ? 0 : l] : cfg.weights;
    const auto kernel = make_kernel(f, sigma, w.values(), cfg.half_window,
                                    cfg.sigma_epsilon, l);
    std::vector<Analog> pool;
    for (std::size_t ti = 0; ti < tests.size(); ++ti) {
      const std::size_t t = tests[ti];
      const std::size_t c0 = search.begin;
      const std::size_t c1 = cfg.operational ? std::max(c0, t) : search.end;
      for (std::size_t j = 0; j < nj; ++j) {
        pool.clear();
        for (std::size_t c = c0; c < c1; ++c) {
          const double d = kernel.distance(t, c, j);
          if (std::isfinite(d)) pool.push_back({c, d});
        }
        if (pool.size() < cfg.members && !cfg.allow_partial) {
          throw Error(Errc::insufficient_candidates,
                      "only " + std::to_string(pool.size()) +
                          " qualified candidates for location " +
                          std::to_string(l) + ", init " + std::to_string(t) +
                          ", lead " + std::to_string(j));
        }
        const std::size_t keep = std::min(pool.size(), cfg.members);
        std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(keep),
                          pool.end(), [](const Analog& a, const Analog& b) {
                            if (a.distance != b.distance) return a.distance < b.distance;
                            return a.search_init < b.search_init;
                          });
        out.assign(l, ti, j, std::span<const Analog>(pool.data(), keep));
      }
    }
  });
  return out;
}

EnsembleTensor build_multivariate_ensemble(
    const AnalogIndexSet& indices, const AlignedObservations& aligned,
    const std::vector<std::string>& variables, const LocationSet& locations,
    const TimeAxis& forecast_inits, const LeadTimeAxis& leads) {
  std::vector<std::size_t> source(variables.size());
  for (std::size_t v = 0; v < variables.size(); ++v) {
    auto idx = aligned.variable_index(variables[v]);
    if (!idx) {
      throw Error(Errc::unknown_variable,
                  "variable '" + variables[v] + "' not present in observations");
    }
    source[v] = *idx;
  }
  if (aligned.values.extent(1) != indices.locations() ||
      aligned.values.extent(3) != indices.leads() ||
      locations.size() != indices.locations() ||
      leads.size() != indices.leads() ||
      aligned.values.extent(2) != forecast_inits.size()) {
    throw Error(Errc::dimension_mismatch,
                "aligned observations do not match the analog index set");
  }
  std::vector<EpochSeconds> test_times;
  for (auto t : indices.test_inits()) test_times.push_back(forecast_inits[t]);

  auto e = EnsembleTensor::make(variables, locations, TimeAxis(test_times), leads,
                                indices.members());
  for (std::size_t l = 0; l < indices.locations(); ++l) {
    for (std::size_t t = 0; t < indices.tests(); ++t) {
      for (std::size_t j = 0; j < indices.leads(); ++j) {
        const auto list = indices.at(l, t, j);
        for (std::size_t m = 0; m < list.size(); ++m) {
          for (std::size_t v = 0; v < variables.size(); ++v) {
            e.values(v, l, t, j, m) =
                aligned.values(source[v], l, list[m].search_init, j);
          }
        }
      }
    }
  }
  return e;
}

void write_analogs(const AnalogIndexSet& set, const TimeAxis& forecast_inits,
                   const std::filesystem::path& path, bool with_distances) {
  const std::size_t fields = with_distances ? 2 : 1;
  Container c;
  c.kind = "analogs";
  c.shape = {fields, set.locations(), set.tests(), set.leads(), set.members()};
  c.names = {"search_index"};
  if (with_distances) c.names.push_back("distance");
  c.axes.emplace_back("source_init_times", forecast_inits.values());
  c.axes.emplace_back("test_indices",
                      std::vector<std::int64_t>(set.test_inits().begin(),
                                                set.test_inits().end()));
  Array<5> a({fields, set.locations(), set.tests(), set.leads(), set.members()});
  for (std::size_t l = 0; l < set.locations(); ++l)
    for (std::size_t t = 0; t < set.tests(); ++t)
      for (std::size_t j = 0; j < set.leads(); ++j) {
        const auto list = set.at(l, t, j);
        for (std::size_t m = 0; m < list.size(); ++m) {
          a(0, l, t, j, m) = static_cast<double>(list[m].search_init);
          if (with_distances) a(1, l, t, j, m) = list[m].distance;
        }
      }
  c.payload.assign(a.data().begin(), a.data().end());
  write_container(c, path);
}

AnalogIndexSet read_analogs(const std::filesystem::path& path) {
  auto c = read_container(path);
  c.expect_kind("analogs");
  if (c.shape.size() != 5 || c.names.size() != c.shape[0] || c.shape[0] < 1) {
    throw Error(Errc::dimension_mismatch, "analog container shape malformed");
  }
  const auto& tests_raw = c.axis("test_indices");
  if (tests_raw.size() != c.shape[2]) {
    throw Error(Errc::dimension_mismatch, "test index axis length mismatch");
  }
  const bool with_distances = c.shape[0] == 2;
  std::vector<std::size_t> tests(tests_raw.begin(), tests_raw.end());
  AnalogIndexSet set(c.shape[1], tests, c.shape[3], c.shape[4]);
  Array<5> a({c.shape[0], c.shape[1], c.shape[2], c.shape[3], c.shape[4]});
  std::copy(c.payload.begin(), c.payload.end(), a.data().begin());
  std::vector<Analog> list;
  for (std::size_t l = 0; l < set.locations(); ++l)
    for (std::size_t t = 0; t < set.tests(); ++t)
      for (std::size_t j = 0; j < set.leads(); ++j) {
        list.clear();
        for (std::size_t m = 0; m < set.members(); ++m) {
          const double idx = a(0, l, t, j, m);
          if (is_missing(idx)) break;
          list.push_back({static_cast<std::size_t>(idx),
                          with_distances ? a(1, l, t, j, m) : kMissing});
        }
        set.assign(l, t, j, list);
      }
  return set;
}

void write_sigma(const SigmaTensor& sigma, const ForecastTensor& f,
                 const std::filesystem::path& path) {
  Container c;
  c.kind = "sigma";
  c.shape = {sigma.values.extent(0), sigma.values.extent(1), sigma.values.extent(2)};
  c.names = f.predictor_names;
  c.locations = f.locations;
  c.axes.emplace_back("lead_times", f.lead_times.values());
  c.payload.assign(sigma.values.data().begin(), sigma.values.data().end());
  write_container(c, path);
}

SigmaTensor read_sigma(const std::filesystem::path& path) {
  auto c = read_container(path);
  c.expect_kind("sigma");
  if (c.shape.size() != 3) throw Error(Errc::dimension_mismatch, "sigma must be rank 3");
  SigmaTensor s{Array<3>({c.shape[0], c.shape[1], c.shape[2]})};
  std::copy(c.payload.begin(), c.payload.end(), s.values.data().begin());
  return s;
}

}  // namespace anensolar
