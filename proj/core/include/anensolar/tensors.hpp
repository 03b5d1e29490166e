#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "anensolar/array.hpp"

namespace anensolar {

/// Seconds since 1970-01-01T00:00:00Z.
using EpochSeconds = std::int64_t;

struct Location {
  std::size_t id = 0;
  double latitude = 0.0;   // degrees north
  double longitude = 0.0;  // degrees east
  double elevation = 0.0;  // meters

  friend bool operator==(const Location&, const Location&) = default;
};

class LocationSet {
 public:
  LocationSet() = default;
  /// Throws Error{out_of_range_value} or Error{duplicate_name} when ids are
  /// not dense 0..L-1 or coordinates fall outside their ranges.
  explicit LocationSet(std::vector<Location> locations);

  std::size_t size() const noexcept { return locations_.size(); }
  const Location& operator[](std::size_t i) const { return locations_.at(i); }
  const std::vector<Location>& items() const noexcept { return locations_; }
  LocationSet subset(const std::vector<std::size_t>& ids) const;

  friend bool operator==(const LocationSet&, const LocationSet&) = default;

 private:
  std::vector<Location> locations_;
};

/// Strictly increasing instants; spacing may be irregular.
class TimeAxis {
 public:
  TimeAxis() = default;
  explicit TimeAxis(std::vector<EpochSeconds> instants);

  std::size_t size() const noexcept { return instants_.size(); }
  EpochSeconds operator[](std::size_t i) const { return instants_.at(i); }
  const std::vector<EpochSeconds>& values() const noexcept { return instants_; }
  /// Exact lookup by binary search.
  std::optional<std::size_t> find(EpochSeconds t) const;

  friend bool operator==(const TimeAxis&, const TimeAxis&) = default;

 private:
  std::vector<EpochSeconds> instants_;
};

/// Strictly increasing, non-negative offsets (seconds) from initialization.
class LeadTimeAxis {
 public:
  LeadTimeAxis() = default;
  explicit LeadTimeAxis(std::vector<std::int64_t> offsets);

  std::size_t size() const noexcept { return offsets_.size(); }
  std::int64_t operator[](std::size_t i) const { return offsets_.at(i); }
  const std::vector<std::int64_t>& values() const noexcept { return offsets_; }

  friend bool operator==(const LeadTimeAxis&, const LeadTimeAxis&) = default;

 private:
  std::vector<std::int64_t> offsets_;
};

/// Half-open interval of init-time indices.
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end > begin ? end - begin : 0; }
  bool empty() const noexcept { return end <= begin; }
  bool contains(std::size_t i) const noexcept { return i >= begin && i < end; }
};

/// predictor x location x init x lead
struct ForecastTensor {
  std::vector<std::string> predictor_names;
  LocationSet locations;
  TimeAxis init_times;
  LeadTimeAxis lead_times;
  Array<4> values;

  /// Allocates a missing-filled tensor after checking name uniqueness.
  static ForecastTensor make(std::vector<std::string> names,
                             LocationSet locations, TimeAxis inits,
                             LeadTimeAxis leads);
  void validate() const;
  std::optional<std::size_t> predictor_index(const std::string& name) const;
};

/// variable x location x valid time
struct ObservationTensor {
  std::vector<std::string> variable_names;
  LocationSet locations;
  TimeAxis valid_times;
  Array<3> values;

  static ObservationTensor make(std::vector<std::string> names,
                                LocationSet locations, TimeAxis times);
  void validate() const;
  std::optional<std::size_t> variable_index(const std::string& name) const;
};

/// variable x location x init x lead x member
struct EnsembleTensor {
  std::vector<std::string> variable_names;
  LocationSet locations;
  TimeAxis init_times;
  LeadTimeAxis lead_times;
  Array<5> values;

  static EnsembleTensor make(std::vector<std::string> names,
                             LocationSet locations, TimeAxis inits,
                             LeadTimeAxis leads, std::size_t members);
  std::size_t members() const { return values.extent(4); }
  void validate() const;
  std::optional<std::size_t> variable_index(const std::string& name) const;
};

/// Observations re-indexed onto the forecast (init, lead) grid:
/// variable x location x init x lead.
struct AlignedObservations {
  std::vector<std::string> variable_names;
  Array<4> values;

  std::optional<std::size_t> variable_index(const std::string& name) const;
};

/// Element (v,l,i,j) = obs at valid time init[i] + lead[j], exact match on
/// epoch seconds; missing where that valid time is absent.
AlignedObservations align_observations(const ObservationTensor& obs,
                                       const TimeAxis& init_times,
                                       const LeadTimeAxis& lead_times);

/// Copy restricted to the named predictors, in the given order.
ForecastTensor select_predictors(const ForecastTensor& f, const std::vector<std::string>& names);

/// Throws Error{duplicate_name} on repeated names.
void check_unique_names(const std::vector<std::string>& names);

}  // namespace anensolar
