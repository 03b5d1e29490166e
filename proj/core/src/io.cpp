#include "anensolar/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "anensolar/error.hpp"

namespace anensolar {

namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
  if (is_missing(v)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, const char* what) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  if (s == "nan" || s == "NaN" || s == "NA" || s.empty()) return kMissing;
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(Errc::malformed_header,
                std::string("cannot parse ") + what + " from '" +
                    std::string(s) + "'");
  }
  return v;
}

std::int64_t parse_int(std::string_view s, const char* what) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  std::int64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(Errc::malformed_header, std::string("cannot parse ") + what +
                                            " from '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int k = 0; k < 8; ++k) r = (r << 8) | ((v >> (8 * k)) & 0xff);
    return r;
  }
  return v;
}

class HeaderReader {
 public:
  explicit HeaderReader(std::istream& in) : in_(in) {}

  // Returns false at the NUL separator line.
  bool next(std::string& line) {
    if (!std::getline(in_, line)) {
      throw Error(Errc::malformed_header, "header ended before separator");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return !(line.size() == 1 && line[0] == '\0');
  }

  std::string expect_line(const char* what) {
    std::string line;
    if (!next(line)) {
      throw Error(Errc::malformed_header,
                  std::string("separator reached while reading ") + what);
    }
    return line;
  }

 private:
  std::istream& in_;
};

std::size_t expect_count(const std::vector<std::string_view>& tok,
                         std::size_t idx, const char* what) {
  if (tok.size() <= idx) {
    throw Error(Errc::malformed_header, std::string("missing count for ") + what);
  }
  auto v = parse_int(tok[idx], what);
  if (v < 0) throw Error(Errc::malformed_header, "negative count");
  return static_cast<std::size_t>(v);
}

bool is_header_keyword(std::string_view word) {
  return word == "kind" || word == "shape" || word == "names" ||
         word == "locations" || word == "axis";
}

}  // namespace

const std::vector<std::int64_t>& Container::axis(const std::string& label) const {
  for (const auto& [name, values] : axes) {
    if (name == label) return values;
  }
  throw Error(Errc::malformed_header, "container lacks axis '" + label + "'");
}

void Container::expect_kind(const std::string& k) const {
  if (kind != k) {
    throw Error(Errc::malformed_header,
                "expected container kind '" + k + "', found '" + kind + "'");
  }
}

void write_container(const Container& c, const fs::path& path) {
  std::size_t cells = 1;
  for (auto e : c.shape) cells *= e;
  if (cells != c.payload.size()) {
    throw Error(Errc::dimension_mismatch, "payload size does not match shape");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_failure, "cannot open " + path.string());

  out << kMagic << '\n' << "kind " << c.kind << '\n' << "shape";
  for (auto e : c.shape) out << ' ' << e;
  out << '\n';
  if (!c.names.empty()) {
    out << "names " << c.names.size() << '\n';
    for (const auto& n : c.names) out << n << '\n';
  }
  if (c.locations) {
    out << "locations " << c.locations->size() << '\n';
    for (const auto& loc : c.locations->items()) {
      out << loc.id << ' ' << format_double(loc.latitude) << ' '
          << format_double(loc.longitude) << ' '
          << format_double(loc.elevation) << '\n';
    }
  }
  for (const auto& [label, values] : c.axes) {
    out << "axis " << label << ' ' << values.size() << '\n';
    for (auto v : values) out << v << '\n';
  }
  out << '\0' << '\n';

  std::vector<std::uint64_t> raw(c.payload.size());
  for (std::size_t k = 0; k < raw.size(); ++k) {
    raw[k] = to_little_endian(std::bit_cast<std::uint64_t>(c.payload[k]));
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(std::uint64_t)));
  if (!out) throw Error(Errc::io_failure, "write failed for " + path.string());
}

Container read_container(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_failure, "cannot open " + path.string());

  HeaderReader header(in);
  std::string line;
  if (!header.next(line) || line != kMagic) {
    throw Error(Errc::malformed_header, "missing magic line " + std::string(kMagic));
  }

  Container c;
  bool have_shape = false;
  while (header.next(line)) {
    auto tok = split_ws(line);
    if (tok.empty()) continue;
    const auto key = tok[0];
    if (key == "kind") {
      if (tok.size() != 2) throw Error(Errc::malformed_header, "bad kind line");
      c.kind = std::string(tok[1]);
    } else if (key == "shape") {
      for (std::size_t k = 1; k < tok.size(); ++k) {
        c.shape.push_back(expect_count(tok, k, "shape"));
      }
      have_shape = true;
    } else if (key == "names") {
      const auto n = expect_count(tok, 1, "names");
      for (std::size_t k = 0; k < n; ++k) {
        auto name = header.expect_line("names");
        auto words = split_ws(name);
        if (words.size() != 1 || is_header_keyword(words[0])) {
          throw Error(Errc::malformed_header,
                      "names section declares " + std::to_string(n) +
                          " entries but row " + std::to_string(k) +
                          " is '" + name + "'");
        }
        c.names.emplace_back(words[0]);
      }
    } else if (key == "locations") {
      const auto n = expect_count(tok, 1, "locations");
      std::vector<Location> locs;
      for (std::size_t k = 0; k < n; ++k) {
        const auto line = header.expect_line("locations");
        auto row = split_ws(line);
        if (row.size() != 4) {
          throw Error(Errc::malformed_header,
                      "location row " + std::to_string(k) + " malformed");
        }
        locs.push_back({static_cast<std::size_t>(parse_int(row[0], "location id")),
                        parse_double(row[1], "latitude"),
                        parse_double(row[2], "longitude"),
                        parse_double(row[3], "elevation")});
      }
      c.locations = LocationSet(std::move(locs));
    } else if (key == "axis") {
      if (tok.size() != 3) throw Error(Errc::malformed_header, "bad axis line");
      const auto n = expect_count(tok, 2, "axis");
      std::vector<std::int64_t> values;
      values.reserve(n);
      for (std::size_t k = 0; k < n; ++k) {
        const auto line = header.expect_line("axis");
        auto row = split_ws(line);
        if (row.size() != 1) {
          throw Error(Errc::malformed_header,
                      "axis " + std::string(tok[1]) + " declares " +
                          std::to_string(n) + " values but row " +
                          std::to_string(k) + " is not a single integer");
        }
        values.push_back(parse_int(row[0], "axis value"));
      }
      c.axes.emplace_back(std::string(tok[1]), std::move(values));
    } else {
      throw Error(Errc::malformed_header, "unknown header line '" + line + "'");
    }
  }
  if (c.kind.empty() || !have_shape) {
    throw Error(Errc::malformed_header, "header lacks kind or shape");
  }

  std::size_t cells = 1;
  for (auto e : c.shape) cells *= e;
  const auto body_start = in.tellg();
  in.seekg(0, std::ios::end);
  const auto body_bytes = static_cast<std::size_t>(in.tellg() - body_start);
  if (body_bytes != cells * sizeof(double)) {
    throw Error(Errc::dimension_mismatch,
                "binary block holds " + std::to_string(body_bytes) +
                    " bytes, shape requires " +
                    std::to_string(cells * sizeof(double)));
  }
  in.seekg(body_start);
  std::vector<std::uint64_t> raw(cells);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(cells * sizeof(double)));
  c.payload.resize(cells);
  for (std::size_t k = 0; k < cells; ++k) {
    c.payload[k] = std::bit_cast<double>(to_little_endian(raw[k]));
  }
  return c;
}

namespace {

void expect_dims(const Container& c, std::vector<std::size_t> expected,
                 const char* what) {
  if (c.shape != expected) {
    throw Error(Errc::dimension_mismatch,
                std::string(what) + " shape does not match header axes");
  }
}

template <std::size_t R>
Array<R> to_array(const Container& c) {
  typename Array<R>::Shape shape{};
  std::copy(c.shape.begin(), c.shape.end(), shape.begin());
  Array<R> a(shape);
  std::copy(c.payload.begin(), c.payload.end(), a.data().begin());
  return a;
}

template <std::size_t R>
std::vector<std::size_t> shape_vec(const Array<R>& a) {
  return {a.shape().begin(), a.shape().end()};
}

Container to_container(const ForecastTensor& t) {
  t.validate();
  Container c{"forecast", shape_vec(t.values), t.predictor_names, t.locations,
              {{"init_times", t.init_times.values()},
               {"lead_times", t.lead_times.values()}},
              {t.values.data().begin(), t.values.data().end()}};
  return c;
}

Container to_container(const ObservationTensor& t) {
  t.validate();
  return {"observation", shape_vec(t.values), t.variable_names, t.locations,
          {{"valid_times", t.valid_times.values()}},
          {t.values.data().begin(), t.values.data().end()}};
}

Container to_container(const EnsembleTensor& t) {
  t.validate();
  return {"ensemble", shape_vec(t.values), t.variable_names, t.locations,
          {{"init_times", t.init_times.values()},
           {"lead_times", t.lead_times.values()}},
          {t.values.data().begin(), t.values.data().end()}};
}

LocationSet require_locations(const Container& c) {
  if (!c.locations) throw Error(Errc::malformed_header, "missing locations section");
  return *c.locations;
}

ForecastTensor forecast_from(const Container& c) {
  if (c.shape.size() != 4) throw Error(Errc::dimension_mismatch, "forecast must be rank 4");
  auto f = ForecastTensor::make(c.names, require_locations(c),
                                TimeAxis(c.axis("init_times")),
                                LeadTimeAxis(c.axis("lead_times")));
  expect_dims(c, shape_vec(f.values), "forecast");
  f.values = to_array<4>(c);
  return f;
}

ObservationTensor observation_from(const Container& c) {
  if (c.shape.size() != 3) throw Error(Errc::dimension_mismatch, "observation must be rank 3");
  auto o = ObservationTensor::make(c.names, require_locations(c),
                                   TimeAxis(c.axis("valid_times")));
  expect_dims(c, shape_vec(o.values), "observation");
  o.values = to_array<3>(c);
  return o;
}

EnsembleTensor ensemble_from(const Container& c) {
  if (c.shape.size() != 5) throw Error(Errc::dimension_mismatch, "ensemble must be rank 5");
  auto e = EnsembleTensor::make(c.names, require_locations(c),
                                TimeAxis(c.axis("init_times")),
                                LeadTimeAxis(c.axis("lead_times")), c.shape[4]);
  expect_dims(c, shape_vec(e.values), "ensemble");
  e.values = to_array<5>(c);
  return e;
}

// ---- long CSV variant ----------------------------------------------------

bool is_csv(const fs::path& p) { return p.extension() == ".csv"; }

void write_location_comments(std::ostream& out, const LocationSet& locs) {
  for (const auto& l : locs.items()) {
    out << "#location," << l.id << ',' << format_double(l.latitude) << ','
        << format_double(l.longitude) << ',' << format_double(l.elevation)
        << '\n';
  }
}

void check_csv_cells(std::size_t cells) {
  if (cells >= kCsvCellLimit) {
    throw Error(Errc::invalid_argument,
                "CSV variant is limited to fewer than 10^6 cells");
  }
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_failure, "cannot open " + path.string());
  return out;
}

struct CsvRows {
  std::vector<std::string> header;
  std::vector<Location> locations;
  std::vector<std::vector<std::string>> rows;
};

CsvRows read_csv_rows(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_failure, "cannot open " + path.string());
  CsvRows out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("#location,", 0) == 0) {
      auto f = split(line, ',');
      if (f.size() != 5) throw Error(Errc::malformed_header, "bad #location row");
      out.locations.push_back({static_cast<std::size_t>(parse_int(f[1], "id")),
                               parse_double(f[2], "latitude"),
                               parse_double(f[3], "longitude"),
                               parse_double(f[4], "elevation")});
      continue;
    }
    if (line[0] == '#') continue;
    std::vector<std::string> fields;
    for (auto f : split(line, ',')) fields.emplace_back(f);
    if (out.header.empty()) {
      out.header = std::move(fields);
    } else {
      if (fields.size() != out.header.size()) {
        throw Error(Errc::dimension_mismatch, "CSV row has wrong column count");
      }
      out.rows.push_back(std::move(fields));
    }
  }
  check_csv_cells(out.rows.size());
  return out;
}

LocationSet csv_locations(const CsvRows& rows, std::size_t count) {
  if (rows.locations.empty()) {
    std::vector<Location> locs(count);
    for (std::size_t k = 0; k < count; ++k) locs[k].id = k;
    return LocationSet(std::move(locs));
  }
  auto locs = rows.locations;
  std::sort(locs.begin(), locs.end(),
            [](const Location& a, const Location& b) { return a.id < b.id; });
  if (locs.size() != count) {
    throw Error(Errc::dimension_mismatch, "#location rows do not cover all locations");
  }
  return LocationSet(std::move(locs));
}

// Names keep first-appearance order; integer axes are sorted.
template <typename Fn>
void collect(const CsvRows& rows, std::size_t col, Fn&& fn) {
  for (const auto& r : rows.rows) fn(r[col]);
}

std::vector<std::string> csv_names(const CsvRows& rows) {
  std::vector<std::string> names;
  std::set<std::string> seen;
  collect(rows, 0, [&](const std::string& s) {
    if (seen.insert(s).second) names.push_back(s);
  });
  return names;
}

std::vector<std::int64_t> csv_axis(const CsvRows& rows, std::size_t col) {
  std::set<std::int64_t> values;
  collect(rows, col, [&](const std::string& s) { values.insert(parse_int(s, "axis")); });
  return {values.begin(), values.end()};
}

std::size_t pos_of(const std::vector<std::int64_t>& axis, std::int64_t v) {
  return static_cast<std::size_t>(std::lower_bound(axis.begin(), axis.end(), v) - axis.begin());
}

std::size_t pos_of(const std::vector<std::string>& names, const std::string& s) {
  return static_cast<std::size_t>(std::find(names.begin(), names.end(), s) - names.begin());
}

}  // namespace

void write_tensor(const ForecastTensor& t, const fs::path& path) {
  if (!is_csv(path)) return write_container(to_container(t), path);
  t.validate();
  check_csv_cells(t.values.size());
  auto out = open_out(path);
  write_location_comments(out, t.locations);
  out << "name,location,init,lead,value\n";
  for (std::size_t p = 0; p < t.predictor_names.size(); ++p)
    for (std::size_t l = 0; l < t.locations.size(); ++l)
      for (std::size_t i = 0; i < t.init_times.size(); ++i)
        for (std::size_t j = 0; j < t.lead_times.size(); ++j)
          out << t.predictor_names[p] << ',' << l << ',' << t.init_times[i]
              << ',' << t.lead_times[j] << ','
              << format_double(t.values(p, l, i, j)) << '\n';
}

void write_tensor(const ObservationTensor& t, const fs::path& path) {
  if (!is_csv(path)) return write_container(to_container(t), path);
  t.validate();
  check_csv_cells(t.values.size());
  auto out = open_out(path);
  write_location_comments(out, t.locations);
  out << "name,location,time,value\n";
  for (std::size_t v = 0; v < t.variable_names.size(); ++v)
    for (std::size_t l = 0; l < t.locations.size(); ++l)
      for (std::size_t i = 0; i < t.valid_times.size(); ++i)
        out << t.variable_names[v] << ',' << l << ',' << t.valid_times[i] << ','
            << format_double(t.values(v, l, i)) << '\n';
}

void write_tensor(const EnsembleTensor& t, const fs::path& path) {
  if (!is_csv(path)) return write_container(to_container(t), path);
  t.validate();
  check_csv_cells(t.values.size());
  auto out = open_out(path);
  write_location_comments(out, t.locations);
  out << "name,location,init,lead,member,value\n";
  for (std::size_t v = 0; v < t.variable_names.size(); ++v)
    for (std::size_t l = 0; l < t.locations.size(); ++l)
      for (std::size_t i = 0; i < t.init_times.size(); ++i)
        for (std::size_t j = 0; j < t.lead_times.size(); ++j)
          for (std::size_t m = 0; m < t.members(); ++m)
            out << t.variable_names[v] << ',' << l << ',' << t.init_times[i]
                << ',' << t.lead_times[j] << ',' << m << ','
                << format_double(t.values(v, l, i, j, m)) << '\n';
}

namespace {

AnyTensor read_csv_tensor(const fs::path& path) {
  auto rows = read_csv_rows(path);
  const auto& h = rows.header;
  const auto names = csv_names(rows);
  const auto loc_axis = csv_axis(rows, 1);
  if (!loc_axis.empty() && (loc_axis.front() != 0 ||
                            loc_axis.back() != static_cast<std::int64_t>(loc_axis.size()) - 1)) {
    throw Error(Errc::dimension_mismatch, "CSV location ids must be dense 0..L-1");
  }
  auto locations = csv_locations(rows, loc_axis.size());

  if (h == std::vector<std::string>{"name", "location", "init", "lead", "value"}) {
    auto inits = csv_axis(rows, 2);
    auto leads = csv_axis(rows, 3);
    auto f = ForecastTensor::make(names, locations, TimeAxis(inits), LeadTimeAxis(leads));
    for (const auto& r : rows.rows) {
      f.values(pos_of(names, r[0]), parse_int(r[1], "location"),
               pos_of(inits, parse_int(r[2], "init")),
               pos_of(leads, parse_int(r[3], "lead"))) = parse_double(r[4], "value");
    }
    return f;
  }
  if (h == std::vector<std::string>{"name", "location", "time", "value"}) {
    auto times = csv_axis(rows, 2);
    auto o = ObservationTensor::make(names, locations, TimeAxis(times));
    for (const auto& r : rows.rows) {
      o.values(pos_of(names, r[0]), parse_int(r[1], "location"),
               pos_of(times, parse_int(r[2], "time"))) = parse_double(r[3], "value");
    }
    return o;
  }
  if (h == std::vector<std::string>{"name", "location", "init", "lead", "member", "value"}) {
    auto inits = csv_axis(rows, 2);
    auto leads = csv_axis(rows, 3);
    auto members = csv_axis(rows, 4);
    auto e = EnsembleTensor::make(names, locations, TimeAxis(inits),
                                  LeadTimeAxis(leads), members.size());
    for (const auto& r : rows.rows) {
      e.values(pos_of(names, r[0]), parse_int(r[1], "location"),
               pos_of(inits, parse_int(r[2], "init")),
               pos_of(leads, parse_int(r[3], "lead")),
               pos_of(members, parse_int(r[4], "member"))) = parse_double(r[5], "value");
    }
    return e;
  }
  throw Error(Errc::malformed_header, "unrecognized CSV header in " + path.string());
}

}  // namespace

AnyTensor read_tensor(const fs::path& path) {
  if (is_csv(path)) return read_csv_tensor(path);
  auto c = read_container(path);
  if (c.kind == "forecast") return forecast_from(c);
  if (c.kind == "observation") return observation_from(c);
  if (c.kind == "ensemble") return ensemble_from(c);
  throw Error(Errc::malformed_header, "container kind '" + c.kind + "' is not a tensor");
}

namespace {

template <typename T>
T read_as(const fs::path& path, const char* what) {
  auto any = read_tensor(path);
  if (auto* t = std::get_if<T>(&any)) return std::move(*t);
  throw Error(Errc::malformed_header, path.string() + " is not " + what);
}

}  // namespace

ForecastTensor read_forecasts(const fs::path& path) {
  return read_as<ForecastTensor>(path, "a forecast tensor");
}

ObservationTensor read_observations(const fs::path& path) {
  return read_as<ObservationTensor>(path, "an observation tensor");
}

EnsembleTensor read_ensemble(const fs::path& path) {
  return read_as<EnsembleTensor>(path, "an ensemble tensor");
}

}  // namespace anensolar
