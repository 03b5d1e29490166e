#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "anensolar/analog.hpp"
#include "anensolar/cluster.hpp"
#include "anensolar/tensors.hpp"

namespace anensolar {

/// Simplex lattice of weight vectors with components in multiples of
/// `step`. Stored as integer parts of 1/step so sums are exact.
class WeightGrid {
 public:
  WeightGrid(std::size_t predictors, std::size_t divisions, bool exclude_unit_vectors,
             std::vector<std::vector<int>> parts);

  std::size_t predictors() const noexcept { return predictors_; }
  std::size_t divisions() const noexcept { return divisions_; }
  bool excludes_unit_vectors() const noexcept { return exclude_unit_vectors_; }
  std::size_t size() const noexcept { return parts_.size(); }
  bool empty() const noexcept { return parts_.empty(); }
  const std::vector<int>& parts(std::size_t k) const { return parts_.at(k); }
  WeightVector vector(std::size_t k) const;
  std::vector<WeightVector> vectors() const;

 private:
  std::size_t predictors_;
  std::size_t divisions_;
  bool exclude_unit_vectors_;
  std::vector<std::vector<int>> parts_;
};

/// All vectors on the lattice, in descending lexicographic order of parts
/// (first component largest first). Throws if 1/step is not integral.
WeightGrid enumerate_weights(std::size_t predictors, double step,
                             bool exclude_unit_vectors = false);

struct SampleAssignment {
  std::vector<std::size_t> sample_of_location;        // per location
  std::vector<std::size_t> representative;             // per sample
  std::vector<std::vector<std::size_t>> members;       // per sample
  std::vector<std::pair<std::int64_t, std::int64_t>> tile;  // (row, col) per sample
};

/// Tiles the bounding box of `locations` from its south-west corner; each
/// non-empty tile becomes a sample whose representative is the member
/// nearest the members' centroid.
SampleAssignment nn_sample_grid(const LocationSet& locations, double lat_spacing = 4.5,
                                double lon_spacing = 3.5);

/// Per regime: max(1, round(share * total)) members (capped at regime size),
/// drawn from a seeded shuffle of the regime.
std::vector<std::vector<std::size_t>> rb_sample_points(const RegimeClustering& clustering,
                                                       std::size_t total_samples,
                                                       std::uint64_t seed);

/// Common form of NN tiles and RB regimes for the optimizer.
struct SampleRegions {
  std::vector<std::size_t> region_of_location;
  std::vector<std::vector<std::size_t>> samples;  // per region
};

SampleRegions regions_from(const SampleAssignment& assignment);
SampleRegions regions_from(const RegimeClustering& clustering,
                           const std::vector<std::vector<std::size_t>>& samples);

enum class Strategy { ew, nn, rb };

Strategy parse_strategy(std::string_view s);
std::string_view to_string(Strategy s);

/// Scores one weight vector at each requested sample location (lower is
/// better). Must be pure per weight vector.
using ScoreFn = std::function<std::vector<double>(const WeightVector&,
                                                  std::span<const std::size_t>)>;

struct OptimizationResult {
  WeightTable per_location;
  std::vector<std::size_t> region_choice;  // grid index per region
  std::vector<double> region_score;        // mean sample score of the choice
};

/// EW: uniform weights everywhere (no scoring). NN/RB: per region, the grid
/// vector minimizing the mean score over the region's samples, broadcast to
/// the region's locations; ties go to the earliest grid vector.
OptimizationResult optimize_weights(const WeightGrid& grid, const ScoreFn& score,
                                    Strategy strategy, const SampleRegions* regions,
                                    std::size_t locations, std::size_t parallel = 1);

/// CSV "location,w1..wN".
void write_weights_csv(const WeightTable& weights, const std::filesystem::path& path);
WeightTable read_weights_csv(const std::filesystem::path& path);

/// CSV "location,sample" for an NN assignment.
void write_assignment_csv(const SampleAssignment& a, const std::filesystem::path& path);

}  // namespace anensolar
