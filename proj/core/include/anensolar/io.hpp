#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "anensolar/tensors.hpp"

namespace anensolar {

/// Generic on-disk container. Text header:
///
///   ANENSOLAR/1
///   kind <kind>
///   shape <n0> <n1> ...
///   names <k>            followed by k name lines        (optional)
///   locations <L>        followed by "id lat lon elev"    (optional)
///   axis <label> <n>     followed by n integer lines      (0..many)
///   \0                   separator line (single NUL byte)
///
/// then prod(shape) little-endian float64 values in row-major order.
struct Container {
  std::string kind;
  std::vector<std::size_t> shape;
  std::vector<std::string> names;
  std::optional<LocationSet> locations;
  std::vector<std::pair<std::string, std::vector<std::int64_t>>> axes;
  std::vector<double> payload;

  const std::vector<std::int64_t>& axis(const std::string& label) const;
  void expect_kind(const std::string& k) const;
};

inline constexpr std::string_view kMagic = "ANENSOLAR/1";

void write_container(const Container& c, const std::filesystem::path& path);
Container read_container(const std::filesystem::path& path);

using AnyTensor = std::variant<ForecastTensor, ObservationTensor, EnsembleTensor>;

/// `.csv` paths use the long CSV form, everything else the binary container.
void write_tensor(const ForecastTensor& t, const std::filesystem::path& path);
void write_tensor(const ObservationTensor& t, const std::filesystem::path& path);
void write_tensor(const EnsembleTensor& t, const std::filesystem::path& path);
AnyTensor read_tensor(const std::filesystem::path& path);

ForecastTensor read_forecasts(const std::filesystem::path& path);
ObservationTensor read_observations(const std::filesystem::path& path);
EnsembleTensor read_ensemble(const std::filesystem::path& path);

/// Cell cap for the CSV variant.
inline constexpr std::size_t kCsvCellLimit = 1'000'000;

}  // namespace anensolar
