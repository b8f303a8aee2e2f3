#include "qgf/stations.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "qgf/error.hpp"

namespace qgf {
namespace {

constexpr double earth_radius_km = 6371.0088;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  const auto e = s.find_last_not_of(" \t\r\"");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last && std::isfinite(out);
}

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  throw Error(ErrorKind::parse, "station csv line " + std::to_string(line) + ": " + what);
}

struct Station {
  double lat = 0.0;
  double lon = 0.0;
  double sum = 0.0;
  int count = 0;
};

}  // namespace

double great_circle_km(double lat1, double lon1, double lat2, double lon2) {
  constexpr double rad = std::numbers::pi / 180.0;
  const double p1 = lat1 * rad, p2 = lat2 * rad;
  const double dp = (lat2 - lat1) * rad, dl = (lon2 - lon1) * rad;
  const double h = std::sin(dp / 2) * std::sin(dp / 2) +
                   std::cos(p1) * std::cos(p2) * std::sin(dl / 2) * std::sin(dl / 2);
  return 2.0 * earth_radius_km * std::asin(std::min(1.0, std::sqrt(h)));
}

StationDataset ingest_station_csv(const std::string& path, const StationGraphOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::parse, "cannot open station csv: " + path);

  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) parse_error(line_no, "missing header");
  const auto header = split_csv_line(line);
  const std::vector<std::string> expected{"station_id", "latitude", "longitude", "date", "value"};
  if (header.size() != expected.size()) parse_error(line_no, "expected 5 columns");
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (trim(header[i]) != expected[i]) parse_error(line_no, "expected column '" + expected[i] + "'");
  }

  std::map<std::string, Station> stations;
  std::vector<std::string> order;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 5) parse_error(line_no, "expected 5 fields");
    const std::string id = trim(cells[0]);
    if (id.empty()) parse_error(line_no, "empty station_id");
    double lat = 0.0, lon = 0.0;
    if (!parse_double(trim(cells[1]), lat) || lat < -90.0 || lat > 90.0) {
      parse_error(line_no, "bad latitude");
    }
    if (!parse_double(trim(cells[2]), lon) || lon < -180.0 || lon > 180.0) {
      parse_error(line_no, "bad longitude");
    }
    const std::string date = trim(cells[3]);
    int year = 0;
    if (date.size() < 4 || std::from_chars(date.data(), date.data() + 4, year).ec != std::errc{}) {
      parse_error(line_no, "bad date");
    }
    auto [it, inserted] = stations.try_emplace(id, Station{lat, lon});
    if (inserted) order.push_back(id);
    const std::string value = trim(cells[4]);
    if (year != options.year || value.empty()) continue;
    double v = 0.0;
    if (!parse_double(value, v)) parse_error(line_no, "bad value");
    it->second.sum += v;
    ++it->second.count;
  }

  StationDataset ds;
  std::vector<const Station*> kept;
  for (const auto& id : order) {
    const Station& s = stations.at(id);
    if (s.count == 0) continue;
    ds.station_ids.push_back(id);
    kept.push_back(&s);
  }
  const auto n = static_cast<Eigen::Index>(kept.size());
  if (n < 2) throw Error(ErrorKind::parse, "need at least two stations with data in the year");

  MatrixXd w = MatrixXd::Zero(n, n);
  Coords coords(n, 2);
  ds.signal.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    coords(i, 0) = kept[i]->lon;
    coords(i, 1) = kept[i]->lat;
    ds.signal(i) = kept[i]->sum / kept[i]->count;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double l =
          great_circle_km(kept[i]->lat, kept[i]->lon, kept[j]->lat, kept[j]->lon) / options.distance_scale_km;
      if (l <= options.kappa) w(i, j) = w(j, i) = std::exp(-l * l / options.theta);
    }
  }
  ds.graph = Graph::from_weights(std::move(w), coords);
  if (!is_connected(ds.graph)) {
    throw Error(ErrorKind::disconnected, "station graph is disconnected; increase kappa");
  }
  return ds;
}

void write_synthetic_station_csv(const std::string& path, int n_stations, int year, int days,
                                 Seed seed, int empty_stations) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::parse, "cannot write station csv: " + path);
  Rng rng{seed};
  std::uniform_real_distribution<double> lat_d(-15.0, -5.0), lon_d(-65.0, -45.0);
  std::normal_distribution<double> jitter(0.0, 1.0);
  out << "station_id,latitude,longitude,date,value\n";
  out.setf(std::ios::fixed);
  out.precision(4);
  for (int s = 0; s < n_stations; ++s) {
    const double lat = lat_d(rng), lon = lon_d(rng);
    const double level = 4.0 + 2.0 * std::sin(lat / 3.0) + 1.5 * std::cos(lon / 5.0);
    const bool empty = s >= n_stations - empty_stations;
    const int record_year = empty ? year - 1 : year;
    for (int d = 0; d < days; ++d) {
      char date[16];
      std::snprintf(date, sizeof date, "%04d-%02d-%02d", record_year, 1 + d / 28 % 12, 1 + d % 28);
      out << "ST" << s << ',' << lat << ',' << lon << ',' << date << ',';
      if (d % 7 != 3) out << std::max(0.0, level + jitter(rng));  // every 7th day missing
      out << '\n';
    }
  }
}

}  // namespace qgf
