#include "anensolar/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "anensolar/error.hpp"

namespace anensolar {

std::pair<Array<2>, std::vector<std::size_t>> zscore_columns(const Array<2>& x) {
  const std::size_t n = x.extent(0), f = x.extent(1);
  std::vector<std::size_t> kept;
  std::vector<double> mean(f, 0.0), sd(f, 0.0);
  for (std::size_t c = 0; c < f; ++c) {
    for (std::size_t r = 0; r < n; ++r) {
      if (!std::isfinite(x(r, c))) {
        throw Error(Errc::invalid_argument,
                    "clustering features must be finite (row " + std::to_string(r) +
                        ", column " + std::to_string(c) + ")");
      }
      mean[c] += x(r, c);
    }
    mean[c] /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) sd[c] += (x(r, c) - mean[c]) * (x(r, c) - mean[c]);
    sd[c] = std::sqrt(sd[c] / static_cast<double>(n));
    if (sd[c] > 0.0) kept.push_back(c);
  }
  Array<2> z({n, kept.size()}, 0.0);
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const auto c = kept[k];
    for (std::size_t r = 0; r < n; ++r) z(r, k) = (x(r, c) - mean[c]) / sd[c];
  }
  return {std::move(z), std::move(kept)};
}

std::vector<Merge> average_linkage(const Array<2>& points) {
  const std::size_t n = points.extent(0), f = points.extent(1);
  std::vector<Merge> merges;
  if (n < 2) return merges;

  // Pairwise distance sums between clusters (symmetric, row-major n x n);
  // the average linkage is sum / (size_a * size_b).
  std::vector<double> sum(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < f; ++c) {
        const double d = points(i, c) - points(j, c);
        d2 += d * d;
      }
      sum[i * n + j] = sum[j * n + i] = std::sqrt(d2);
    }
  }
  std::vector<std::size_t> size(n, 1);
  std::vector<bool> active(n, true);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  auto link = [&](std::size_t a, std::size_t b) {
    return sum[a * n + b] / static_cast<double>(size[a] * size[b]);
  };

  // best[i]: nearest active j > i, smallest j on ties.
  std::vector<double> best_d(n, kInf);
  std::vector<std::size_t> best_j(n, n);
  auto refresh = [&](std::size_t i) {
    best_d[i] = kInf;
    best_j[i] = n;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!active[j]) continue;
      const double d = link(i, j);
      if (d < best_d[i]) {
        best_d[i] = d;
        best_j[i] = j;
      }
    }
  };
  for (std::size_t i = 0; i < n; ++i) refresh(i);

  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t a = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i] || best_j[i] == n) continue;
      if (a == n || best_d[i] < best_d[a]) a = i;
    }
    const std::size_t b = best_j[a];
    merges.push_back({a, b, best_d[a], size[a] + size[b]});

    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == a || k == b) continue;
      sum[a * n + k] = sum[k * n + a] = sum[a * n + k] + sum[b * n + k];
    }
    size[a] += size[b];
    active[b] = false;

    refresh(a);
    for (std::size_t k = 0; k < b; ++k) {
      if (!active[k] || k == a) continue;
      if (best_j[k] == a || best_j[k] == b) {
        refresh(k);
      } else if (k < a) {
        const double d = link(k, a);
        if (d < best_d[k] || (d == best_d[k] && a < best_j[k])) {
          best_d[k] = d;
          best_j[k] = a;
        }
      }
    }
  }
  return merges;
}

namespace {

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

}  // namespace

std::vector<int> cut_tree(const std::vector<Merge>& merges, std::size_t n, std::size_t k) {
  if (k < 1 || k > n) {
    throw Error(Errc::invalid_argument,
                "cluster count " + std::to_string(k) + " must lie in [1, " +
                    std::to_string(n) + "]");
  }
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  for (std::size_t s = 0; s < n - k && s < merges.size(); ++s) {
    const auto ra = find_root(parent, merges[s].first);
    const auto rb = find_root(parent, merges[s].second);
    parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  std::map<std::size_t, int> label_of_root;
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = find_root(parent, i);
    auto [it, inserted] =
        label_of_root.emplace(r, static_cast<int>(label_of_root.size()) + 1);
    labels[i] = it->second;
  }
  return labels;
}

std::vector<std::vector<std::size_t>> RegimeClustering::members() const {
  std::vector<std::vector<std::size_t>> out(regimes());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out[static_cast<std::size_t>(labels[i] - 1)].push_back(i);
  }
  return out;
}

RegimeClustering hierarchical_cluster(const Array<2>& features, std::size_t k) {
  const std::size_t n = features.extent(0);
  if (k < 1 || k > n) {
    throw Error(Errc::invalid_argument,
                "requested " + std::to_string(k) + " clusters for " +
                    std::to_string(n) + " locations");
  }
  auto [z, kept] = zscore_columns(features);
  RegimeClustering rc;
  rc.merges = average_linkage(z);
  rc.labels = cut_tree(rc.merges, n, k);
  rc.kept_columns = kept;
  rc.centroids = Array<2>({k, kept.size()}, 0.0);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(rc.labels[i] - 1);
    ++counts[c];
    for (std::size_t f = 0; f < kept.size(); ++f) rc.centroids(c, f) += z(i, f);
  }
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t f = 0; f < kept.size(); ++f)
      rc.centroids(c, f) /= static_cast<double>(counts[c]);
  return rc;
}

Array<2> regime_features(const ObservationTensor& obs, const std::string& ghi,
                         const std::string& temperature, const std::string& cloud,
                         const std::string& orography) {
  auto need = [&](const std::string& name) {
    auto v = obs.variable_index(name);
    if (!v) throw Error(Errc::unknown_variable, "analysis lacks variable '" + name + "'");
    return *v;
  };
  const auto vg = need(ghi), vt = need(temperature), vc = need(cloud);
  const auto vo = obs.variable_index(orography);
  const std::size_t nl = obs.locations.size(), nt = obs.valid_times.size();

  Array<2> feats({nl, 4});
  for (std::size_t l = 0; l < nl; ++l) {
    // orography: static variable when present, otherwise site elevation
    double oro = obs.locations[l].elevation;
    if (vo) {
      double s = 0;
      std::size_t c = 0;
      for (std::size_t t = 0; t < nt; ++t) {
        const double v = obs.values(*vo, l, t);
        if (!is_missing(v)) { s += v; ++c; }
      }
      if (c) oro = s / static_cast<double>(c);
    }
    std::map<std::int64_t, std::pair<double, double>> daily;  // day -> (max ghi, max temp)
    double cloud_sum = 0;
    std::size_t cloud_n = 0;
    for (std::size_t t = 0; t < nt; ++t) {
      const auto day = obs.valid_times[t] >= 0 ? obs.valid_times[t] / 86400
                                               : (obs.valid_times[t] - 86399) / 86400;
      auto [it, fresh] = daily.emplace(day, std::pair{-1e300, -1e300});
      const double g = obs.values(vg, l, t), tt = obs.values(vt, l, t);
      if (!is_missing(g)) it->second.first = std::max(it->second.first, g);
      if (!is_missing(tt)) it->second.second = std::max(it->second.second, tt);
      const double c = obs.values(vc, l, t);
      if (!is_missing(c)) { cloud_sum += c; ++cloud_n; }
    }
    double gsum = 0, tsum = 0;
    std::size_t gn = 0, tn = 0;
    for (const auto& [day, mx] : daily) {
      if (mx.first > -1e300) { gsum += mx.first; ++gn; }
      if (mx.second > -1e300) { tsum += mx.second; ++tn; }
    }
    feats(l, 0) = oro;
    feats(l, 1) = gn ? gsum / static_cast<double>(gn) : kMissing;
    feats(l, 2) = tn ? tsum / static_cast<double>(tn) : kMissing;
    feats(l, 3) = cloud_n ? cloud_sum / static_cast<double>(cloud_n) : kMissing;
  }
  return feats;
}

void write_labels_csv(const std::vector<int>& labels, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_failure, "cannot open " + path.string());
  out << "location,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) out << i << ',' << labels[i] << '\n';
}

std::vector<int> read_labels_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_failure, "cannot open " + path.string());
  std::string line;
  std::vector<std::pair<std::size_t, int>> rows;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) { header = false; continue; }
    std::istringstream ss(line);
    std::size_t loc;
    char comma;
    int label;
    if (!(ss >> loc >> comma >> label)) {
      throw Error(Errc::malformed_header, "bad label row '" + line + "'");
    }
    rows.emplace_back(loc, label);
  }
  std::vector<int> labels(rows.size(), 0);
  for (auto [loc, label] : rows) {
    if (loc >= labels.size()) throw Error(Errc::dimension_mismatch, "label ids not dense");
    labels[loc] = label;
  }
  return labels;
}

}  // namespace anensolar
