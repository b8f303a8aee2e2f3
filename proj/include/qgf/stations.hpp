#pragma once

#include <string>
#include <vector>

#include "qgf/graph.hpp"
#include "qgf/rng.hpp"
#include "qgf/types.hpp"

namespace qgf {

/// Distances are great-circle kilometres divided by `distance_scale_km`;
/// `kappa` and `theta` apply to the scaled distance. The default scale
/// (km per degree of arc) makes both read in degrees.
struct StationGraphOptions {
  int year = 2010;
  double theta = 0.05;
  double kappa = 1.8;
  double distance_scale_km = 111.195;
};

struct StationDataset {
  Graph graph;
  VectorXd signal;  // mean of the available daily values in the year
  std::vector<std::string> station_ids;
};

double great_circle_km(double lat1, double lon1, double lat2, double lon2);

/// Reads `station_id,latitude,longitude,date,value` rows (date YYYY-MM-DD,
/// empty value = missing). Stations without data in the year are dropped.
StationDataset ingest_station_csv(const std::string& path, const StationGraphOptions& options);

/// Writes a synthetic file with the same schema: stations scattered over a
/// lat/lon box, smooth rain field, `days` daily records each. The last
/// `empty_stations` stations only carry records from the previous year.
void write_synthetic_station_csv(const std::string& path, int n_stations, int year, int days,
                                 Seed seed, int empty_stations = 1);

}  // namespace qgf
