#include "anensolar/tensors.hpp"

#include <algorithm>
#include <set>

#include "anensolar/error.hpp"

namespace anensolar {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::malformed_header: return "malformed_header";
    case Errc::dimension_mismatch: return "dimension_mismatch";
    case Errc::duplicate_name: return "duplicate_name";
    case Errc::non_monotone_axis: return "non_monotone_axis";
    case Errc::out_of_range_value: return "out_of_range_value";
    case Errc::io_failure: return "io_failure";
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::unknown_variable: return "unknown_variable";
    case Errc::empty_range: return "empty_range";
    case Errc::insufficient_candidates: return "insufficient_candidates";
    case Errc::invalid_workflow: return "invalid_workflow";
    case Errc::backend_unavailable: return "backend_unavailable";
  }
  return "unknown";
}

LocationSet::LocationSet(std::vector<Location> locations)
    : locations_(std::move(locations)) {
  for (std::size_t i = 0; i < locations_.size(); ++i) {
    const auto& loc = locations_[i];
    if (loc.id != i) {
      throw Error(Errc::duplicate_name,
                  "location ids must be dense 0..L-1; got id " +
                      std::to_string(loc.id) + " at position " +
                      std::to_string(i));
    }
    if (!(loc.latitude >= -90.0 && loc.latitude <= 90.0) ||
        !(loc.longitude >= -180.0 && loc.longitude <= 180.0)) {
      throw Error(Errc::out_of_range_value,
                  "location " + std::to_string(i) +
                      " has coordinates outside [-90,90]x[-180,180]");
    }
  }
}

LocationSet LocationSet::subset(const std::vector<std::size_t>& ids) const {
  std::vector<Location> out;
  out.reserve(ids.size());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    Location loc = locations_.at(ids[k]);
    loc.id = k;
    out.push_back(loc);
  }
  return LocationSet(std::move(out));
}

TimeAxis::TimeAxis(std::vector<EpochSeconds> instants)
    : instants_(std::move(instants)) {
  for (std::size_t i = 1; i < instants_.size(); ++i) {
    if (instants_[i] <= instants_[i - 1]) {
      throw Error(Errc::non_monotone_axis,
                  "time axis not strictly increasing at index " +
                      std::to_string(i));
    }
  }
}

std::optional<std::size_t> TimeAxis::find(EpochSeconds t) const {
  auto it = std::lower_bound(instants_.begin(), instants_.end(), t);
  if (it == instants_.end() || *it != t) return std::nullopt;
  return static_cast<std::size_t>(it - instants_.begin());
}

LeadTimeAxis::LeadTimeAxis(std::vector<std::int64_t> offsets)
    : offsets_(std::move(offsets)) {
  for (std::size_t i = 0; i < offsets_.size(); ++i) {
    if (offsets_[i] < 0) {
      throw Error(Errc::non_monotone_axis, "negative lead time offset");
    }
    if (i > 0 && offsets_[i] <= offsets_[i - 1]) {
      throw Error(Errc::non_monotone_axis,
                  "lead axis not strictly increasing at index " +
                      std::to_string(i));
    }
  }
}

void check_unique_names(const std::vector<std::string>& names) {
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (n.empty()) throw Error(Errc::malformed_header, "empty variable name");
    if (!seen.insert(n).second) {
      throw Error(Errc::duplicate_name, "duplicate name '" + n + "'");
    }
  }
}

namespace {

std::optional<std::size_t> index_of(const std::vector<std::string>& names,
                                    const std::string& name) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

void expect_shape(bool ok, const char* what) {
  if (!ok) throw Error(Errc::dimension_mismatch, what);
}

}  // namespace

ForecastTensor ForecastTensor::make(std::vector<std::string> names,
                                    LocationSet locations, TimeAxis inits,
                                    LeadTimeAxis leads) {
  check_unique_names(names);
  ForecastTensor f;
  f.values = Array<4>({names.size(), locations.size(), inits.size(),
                       leads.size()});
  f.predictor_names = std::move(names);
  f.locations = std::move(locations);
  f.init_times = std::move(inits);
  f.lead_times = std::move(leads);
  return f;
}

void ForecastTensor::validate() const {
  check_unique_names(predictor_names);
  expect_shape(values.shape() == Array<4>::Shape{predictor_names.size(),
                                                 locations.size(),
                                                 init_times.size(),
                                                 lead_times.size()},
               "forecast values shape does not match axes");
}

std::optional<std::size_t> ForecastTensor::predictor_index(
    const std::string& name) const {
  return index_of(predictor_names, name);
}

ObservationTensor ObservationTensor::make(std::vector<std::string> names,
                                          LocationSet locations,
                                          TimeAxis times) {
  check_unique_names(names);
  ObservationTensor o;
  o.values = Array<3>({names.size(), locations.size(), times.size()});
  o.variable_names = std::move(names);
  o.locations = std::move(locations);
  o.valid_times = std::move(times);
  return o;
}

void ObservationTensor::validate() const {
  check_unique_names(variable_names);
  expect_shape(values.shape() == Array<3>::Shape{variable_names.size(),
                                                 locations.size(),
                                                 valid_times.size()},
               "observation values shape does not match axes");
}

std::optional<std::size_t> ObservationTensor::variable_index(
    const std::string& name) const {
  return index_of(variable_names, name);
}

EnsembleTensor EnsembleTensor::make(std::vector<std::string> names,
                                    LocationSet locations, TimeAxis inits,
                                    LeadTimeAxis leads, std::size_t members) {
  check_unique_names(names);
  EnsembleTensor e;
  e.values = Array<5>({names.size(), locations.size(), inits.size(),
                       leads.size(), members});
  e.variable_names = std::move(names);
  e.locations = std::move(locations);
  e.init_times = std::move(inits);
  e.lead_times = std::move(leads);
  return e;
}

void EnsembleTensor::validate() const {
  check_unique_names(variable_names);
  expect_shape(values.extent(0) == variable_names.size() &&
                   values.extent(1) == locations.size() &&
                   values.extent(2) == init_times.size() &&
                   values.extent(3) == lead_times.size(),
               "ensemble values shape does not match axes");
}

std::optional<std::size_t> EnsembleTensor::variable_index(
    const std::string& name) const {
  return index_of(variable_names, name);
}

std::optional<std::size_t> AlignedObservations::variable_index(
    const std::string& name) const {
  return index_of(variable_names, name);
}

AlignedObservations align_observations(const ObservationTensor& obs,
                                       const TimeAxis& init_times,
                                       const LeadTimeAxis& lead_times) {
  const std::size_t nv = obs.variable_names.size();
  const std::size_t nl = obs.locations.size();
  const std::size_t ni = init_times.size();
  const std::size_t nj = lead_times.size();

  // Valid-time index per (init, lead) is shared by every variable/location.
  std::vector<std::optional<std::size_t>> slot(ni * nj);
  for (std::size_t i = 0; i < ni; ++i) {
    for (std::size_t j = 0; j < nj; ++j) {
      slot[i * nj + j] = obs.valid_times.find(init_times[i] + lead_times[j]);
    }
  }

  AlignedObservations out{obs.variable_names, Array<4>({nv, nl, ni, nj})};
  for (std::size_t v = 0; v < nv; ++v) {
    for (std::size_t l = 0; l < nl; ++l) {
      for (std::size_t i = 0; i < ni; ++i) {
        for (std::size_t j = 0; j < nj; ++j) {
          if (const auto& s = slot[i * nj + j]) {
            out.values(v, l, i, j) = obs.values(v, l, *s);
          }
        }
      }
    }
  }
  return out;
}

ForecastTensor select_predictors(const ForecastTensor& f, const std::vector<std::string>& names) {
  std::vector<std::size_t> src;
  for (const auto& n : names) {
    auto p = f.predictor_index(n);
    if (!p) throw Error(Errc::unknown_variable, "forecasts lack predictor '" + n + "'");
    src.push_back(*p);
  }
  auto out = ForecastTensor::make(names, f.locations, f.init_times, f.lead_times);
  const std::size_t block = f.values.size() / std::max<std::size_t>(f.predictor_names.size(), 1);
  for (std::size_t k = 0; k < src.size(); ++k) {
    std::copy_n(f.values.data().begin() + static_cast<std::ptrdiff_t>(src[k] * block), block,
                out.values.data().begin() + static_cast<std::ptrdiff_t>(k * block));
  }
  return out;
}

}  // namespace anensolar
