#include "anensolar/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "anensolar/error.hpp"

namespace anensolar {

namespace {

void check_pairs(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(Errc::dimension_mismatch, "prediction and truth lengths differ");
  }
}

}  // namespace

double rmse(std::span<const double> pred, std::span<const double> truth) {
  check_pairs(pred, truth);
  double ss = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    if (is_missing(pred[k]) || is_missing(truth[k])) continue;
    const double d = pred[k] - truth[k];
    ss += d * d;
    ++n;
  }
  if (n == 0) throw Error(Errc::empty_range, "no complete pairs for RMSE");
  return std::sqrt(ss / static_cast<double>(n));
}

double bias(std::span<const double> pred, std::span<const double> truth) {
  check_pairs(pred, truth);
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    if (is_missing(pred[k]) || is_missing(truth[k])) continue;
    s += pred[k] - truth[k];
    ++n;
  }
  if (n == 0) throw Error(Errc::empty_range, "no complete pairs for bias");
  return s / static_cast<double>(n);
}

double crps(std::span<const double> x, double y) {
  if (x.empty()) throw Error(Errc::empty_range, "CRPS needs at least one member");
  const double m = static_cast<double>(x.size());
  double abs_err = 0.0;
  for (double v : x) abs_err += std::abs(v - y);
  double pair = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) pair += std::abs(x[i] - x[j]);
  return std::max(abs_err / m - pair / (2.0 * m * m), 0.0);
}

double ensemble_spread(std::span<const double> x) {
  if (x.empty()) throw Error(Errc::empty_range, "spread needs at least one member");
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(x.size()));
}

std::optional<std::size_t> SolarNoonAlignment::slot(std::size_t location,
                                                     std::size_t lead) const {
  const auto s = static_cast<std::ptrdiff_t>(lead) - offset.at(location);
  if (s < 0 || s >= static_cast<std::ptrdiff_t>(lead_count)) return std::nullopt;
  return static_cast<std::size_t>(s);
}

SolarNoonAlignment align_solar_noon(const SolarCacheTable& cache, std::size_t noon_slot) {
  const std::size_t nl = cache.locations().size(), ni = cache.init_times().size(),
                    nj = cache.lead_times().size();
  if (nl == 0 || ni == 0 || nj == 0) {
    throw Error(Errc::invalid_argument, "solar cache missing or empty");
  }
  SolarNoonAlignment a;
  a.noon_slot = noon_slot;
  a.lead_count = nj;
  a.offset.resize(nl);
  for (std::size_t l = 0; l < nl; ++l) {
    std::size_t best = 0;
    double best_z = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < nj; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < ni; ++i) s += cache.at(l, i, j).position.apparent_zenith;
      const double mean = s / static_cast<double>(ni);
      if (mean < best_z) {
        best_z = mean;
        best = j;
      }
    }
    a.offset[l] = static_cast<std::ptrdiff_t>(best) - static_cast<std::ptrdiff_t>(noon_slot);
  }
  return a;
}

RegionMap read_region_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_failure, "cannot open " + path.string());
  RegionMap map;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw Error(Errc::malformed_header, "region map row lacks a comma: '" + line + "'");
    }
    const auto id = line.substr(0, comma);
    const auto label = line.substr(comma + 1);
    if (first && !std::all_of(id.begin(), id.end(), ::isdigit)) {
      first = false;  // header row
      continue;
    }
    first = false;
    if (label.empty()) continue;
    map[std::stoul(id)] = label;
  }
  return map;
}

Grouping parse_grouping(std::string_view key) {
  if (key == "all") return Grouping::all;
  if (key == "lead" || key == "lead-time") return Grouping::lead;
  if (key == "location") return Grouping::location;
  if (key == "region") return Grouping::region;
  if (key == "season") return Grouping::season;
  if (key == "daypart") return Grouping::daypart;
  throw Error(Errc::invalid_argument, "unknown grouping key '" + std::string(key) + "'");
}

std::string_view to_string(Grouping g) {
  switch (g) {
    case Grouping::all: return "all";
    case Grouping::lead: return "lead";
    case Grouping::location: return "location";
    case Grouping::region: return "region";
    case Grouping::season: return "season";
    case Grouping::daypart: return "daypart";
  }
  return "?";
}

std::string_view season_of(EpochSeconds t) {
  using namespace std::chrono;
  const year_month_day ymd{floor<days>(sys_seconds{seconds{t}})};
  const unsigned m = static_cast<unsigned>(ymd.month());
  if (m == 12 || m <= 2) return "DJF";
  if (m <= 5) return "MAM";
  if (m <= 8) return "JJA";
  return "SON";
}

std::optional<std::string_view> daypart_of(std::size_t slot) {
  if (slot >= 8 && slot <= 10) return "morning";
  if (slot >= 11 && slot <= 13) return "noon";
  if (slot >= 14 && slot <= 16) return "afternoon";
  return std::nullopt;
}

namespace {

struct Accumulator {
  double sq = 0.0, err = 0.0, crps = 0.0, spread = 0.0;
  std::size_t n = 0;
};

}  // namespace

VerifyReport aggregate(const VerifyInputs& in, Grouping grouping, const RegionMap* regions,
                       const SolarNoonAlignment* alignment) {
  if (!in.forecast || !in.truth) throw Error(Errc::invalid_argument, "forecast and truth required");
  if (!in.cache) throw Error(Errc::invalid_argument, "solar cache missing");
  if (grouping == Grouping::region && !regions) {
    throw Error(Errc::invalid_argument, "region grouping needs a region map");
  }
  if (grouping == Grouping::daypart && !alignment) {
    throw Error(Errc::invalid_argument, "daypart grouping needs solar-noon alignment");
  }
  const auto& f = *in.forecast;
  const auto& t = *in.truth;
  const auto fv = f.variable_index(in.variable);
  const auto tv = t.variable_index(in.truth_variable.empty() ? in.variable : in.truth_variable);
  if (!fv || !tv) throw Error(Errc::unknown_variable, "verification variable not found");
  if (!(f.locations == t.locations) || !(f.lead_times == t.lead_times)) {
    throw Error(Errc::dimension_mismatch, "forecast and truth axes differ");
  }
  if (!(in.cache->locations() == f.locations) || !(in.cache->lead_times() == f.lead_times)) {
    throw Error(Errc::dimension_mismatch, "solar cache does not cover the forecast axes");
  }

  const std::size_t nl = f.locations.size(), ni = f.init_times.size(),
                    nj = f.lead_times.size(), nm = f.members();
  std::map<std::pair<std::int64_t, std::string>, Accumulator> groups;
  std::vector<double> members;
  members.reserve(nm);

  for (std::size_t i = 0; i < ni; ++i) {
    const auto ti = t.init_times.find(f.init_times[i]);
    const auto ci = in.cache->init_times().find(f.init_times[i]);
    if (!ti || !ci) {
      throw Error(Errc::dimension_mismatch,
                  "truth or solar cache lacks init " + std::to_string(f.init_times[i]));
    }
    for (std::size_t l = 0; l < nl; ++l) {
      for (std::size_t j = 0; j < nj; ++j) {
        if (!(in.cache->at(l, *ci, j).position.apparent_zenith < 90.0)) continue;
        const double y = t.values(*tv, l, *ti, j, 0);
        if (is_missing(y)) continue;
        members.clear();
        for (std::size_t m = 0; m < nm; ++m) {
          const double x = f.values(*fv, l, i, j, m);
          if (!is_missing(x)) members.push_back(x);
        }
        if (members.empty()) continue;

        std::pair<std::int64_t, std::string> key{0, ""};
        switch (grouping) {
          case Grouping::all: key = {0, "all"}; break;
          case Grouping::lead: {
            if (alignment) {
              auto s = alignment->slot(l, j);
              if (!s) continue;
              key = {static_cast<std::int64_t>(*s), std::to_string(*s)};
            } else {
              key = {static_cast<std::int64_t>(j), std::to_string(j)};
            }
            break;
          }
          case Grouping::location:
            key = {static_cast<std::int64_t>(l), std::to_string(l)};
            break;
          case Grouping::region: {
            auto it = regions->find(l);
            if (it == regions->end()) continue;
            key = {0, it->second};
            break;
          }
          case Grouping::season: {
            static constexpr std::string_view order[] = {"DJF", "MAM", "JJA", "SON"};
            const auto s = season_of(f.init_times[i] + f.lead_times[j]);
            key = {std::find(std::begin(order), std::end(order), s) - std::begin(order),
                   std::string(s)};
            break;
          }
          case Grouping::daypart: {
            auto s = alignment->slot(l, j);
            if (!s) continue;
            auto part = daypart_of(*s);
            if (!part) continue;
            key = {*part == "morning" ? 0 : (*part == "noon" ? 1 : 2), std::string(*part)};
            break;
          }
        }

        const double mean =
            std::accumulate(members.begin(), members.end(), 0.0) / static_cast<double>(members.size());
        auto& acc = groups[key];
        acc.sq += (mean - y) * (mean - y);
        acc.err += mean - y;
        acc.crps += crps(members, y);
        acc.spread += ensemble_spread(members);
        ++acc.n;
      }
    }
  }

  VerifyReport report;
  report.grouping = grouping;
  for (const auto& [key, acc] : groups) {
    const double n = static_cast<double>(acc.n);
    report.rows.push_back({key.second, std::sqrt(acc.sq / n), acc.err / n, acc.crps / n,
                           acc.spread / n, acc.n});
  }
  return report;
}

void write_report_csv(const VerifyReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_failure, "cannot open " + path.string());
  out.precision(17);
  out << "group,rmse,bias,crps,spread,count\n";
  for (const auto& r : report.rows) {
    out << r.group << ',' << r.rmse << ',' << r.bias << ',' << r.crps << ',' << r.spread
        << ',' << r.count << '\n';
  }
}

VerifyReport read_report_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_failure, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("group,rmse,bias,crps,spread,count", 0) != 0) {
    throw Error(Errc::malformed_header, path.string() + " is not a verification report");
  }
  VerifyReport report;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    VerifyRow r;
    std::string field;
    std::getline(ss, r.group, ',');
    std::getline(ss, field, ','); r.rmse = std::stod(field);
    std::getline(ss, field, ','); r.bias = std::stod(field);
    std::getline(ss, field, ','); r.crps = std::stod(field);
    std::getline(ss, field, ','); r.spread = std::stod(field);
    std::getline(ss, field, ','); r.count = std::stoul(field);
    report.rows.push_back(std::move(r));
  }
  return report;
}

namespace {

// P(W+ <= w) under H0 for n untied nonzero differences.
double exact_lower_tail(std::size_t n, double w) {
  const std::size_t max_sum = n * (n + 1) / 2;
  std::vector<double> counts(max_sum + 1, 0.0);
  counts[0] = 1.0;
  for (std::size_t r = 1; r <= n; ++r) {
    for (std::size_t s = max_sum; s >= r; --s) counts[s] += counts[s - r];
  }
  const double total = std::ldexp(1.0, static_cast<int>(n));
  double cum = 0.0;
  for (std::size_t s = 0; s <= max_sum && static_cast<double>(s) <= w + 1e-9; ++s) cum += counts[s];
  return cum / total;
}

}  // namespace

SignificanceResult paired_significance(std::span<const double> a, std::span<const double> b,
                                       double level) {
  check_pairs(a, b);
  if (a.size() < 8) throw Error(Errc::invalid_argument, "paired test needs n >= 8");
  std::vector<double> d;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (is_missing(a[k]) || is_missing(b[k])) continue;
    const double diff = a[k] * a[k] - b[k] * b[k];
    if (diff != 0.0) d.push_back(diff);
  }
  SignificanceResult res;
  res.nonzero = d.size();
  if (d.empty()) return res;

  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return std::abs(d[x]) < std::abs(d[y]); });
  std::vector<double> rank(d.size());
  double tie_term = 0.0;
  bool ties = false;
  for (std::size_t s = 0; s < order.size();) {
    std::size_t e = s + 1;
    while (e < order.size() && std::abs(d[order[e]]) == std::abs(d[order[s]])) ++e;
    const double avg = (static_cast<double>(s + 1) + static_cast<double>(e)) / 2.0;
    for (std::size_t k = s; k < e; ++k) rank[order[k]] = avg;
    const double t = static_cast<double>(e - s);
    if (e - s > 1) ties = true;
    tie_term += t * t * t - t;
    s = e;
  }
  double w_plus = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (d[k] > 0) w_plus += rank[k];
  }
  res.statistic = w_plus;
  const std::size_t n = d.size();
  const double nn = static_cast<double>(n);
  const double max_sum = nn * (nn + 1) / 2.0;

  if (!ties && n <= 50) {
    const double lower = exact_lower_tail(n, w_plus);
    const double upper = exact_lower_tail(n, max_sum - w_plus);  // symmetric null
    res.p_value = std::min(1.0, 2.0 * std::min(lower, upper));
  } else {
    const double mean = max_sum / 2.0;
    const double var = nn * (nn + 1) * (2 * nn + 1) / 24.0 - tie_term / 48.0;
    if (var <= 0) return res;
    const double diff = std::abs(w_plus - mean);
    const double z = std::max(diff - 0.5, 0.0) / std::sqrt(var);
    res.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  }
  res.significant = res.p_value < level;
  return res;
}

}  // namespace anensolar
