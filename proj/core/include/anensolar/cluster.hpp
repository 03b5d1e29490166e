#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "anensolar/array.hpp"
#include "anensolar/tensors.hpp"

namespace anensolar {

/// One agglomeration step. Clusters are named by their smallest member
/// index, so `first < second` and the merged cluster keeps `first`.
struct Merge {
  std::size_t first = 0;
  std::size_t second = 0;
  double height = 0.0;  // average pairwise Euclidean distance
  std::size_t size = 0; // members after merging

  friend bool operator==(const Merge&, const Merge&) = default;
};

/// Z-scores each column; columns with zero spread are dropped.
/// Returns the standardized matrix and the indices of kept columns.
std::pair<Array<2>, std::vector<std::size_t>> zscore_columns(const Array<2>& features);

/// Unweighted average-linkage (UPGMA) agglomeration over rows of `points`.
/// Ties go to the lexicographically smallest (first, second) pair.
std::vector<Merge> average_linkage(const Array<2>& points);

/// Labels 1..K after applying the first n-K merges; label order follows the
/// smallest member index of each cluster.
std::vector<int> cut_tree(const std::vector<Merge>& merges, std::size_t n, std::size_t k);

struct RegimeClustering {
  std::vector<int> labels;             // per location, 1..K
  Array<2> centroids;                  // K x kept features, z-score space
  std::vector<std::size_t> kept_columns;
  std::vector<Merge> merges;

  std::size_t regimes() const { return centroids.extent(0); }
  std::vector<std::vector<std::size_t>> members() const;
};

/// Z-score, average-link, cut to exactly K clusters.
RegimeClustering hierarchical_cluster(const Array<2>& features, std::size_t k);

/// Per-location clustering features: orography, mean daily-max GHI, mean
/// daily-max temperature, mean cloud cover. Days are UTC calendar days.
Array<2> regime_features(const ObservationTensor& analysis, const std::string& ghi = "dswrf",
                         const std::string& temperature = "2t",
                         const std::string& cloud = "tcc",
                         const std::string& orography = "orog");

/// CSV "location,label".
void write_labels_csv(const std::vector<int>& labels, const std::filesystem::path& path);
std::vector<int> read_labels_csv(const std::filesystem::path& path);

}  // namespace anensolar
