#pragma once

#include <filesystem>
#include <string>

#include "s3n/predict.hpp"
#include "s3n/vecchia.hpp"

namespace s3n {
namespace io {

// Flowline CSV: reach_id,length_m,additive_attr,wkt with LINESTRING geometry,
// or NDJSON records {"reach_id":..,"length_m":..,"additive_attr":..,"coords":[[x,y],..]}.
std::vector<Flowline> read_flowlines(const std::filesystem::path& path);
void write_flowlines(const std::filesystem::path& path, const std::vector<Flowline>& flowlines);

// Sites CSV: site_id,x,y[,reach_id,ratio],y_obs,cov_1..cov_p. Empty fields are
// treated as absent; an intercept column is prepended to the covariates.
std::vector<SiteInput> read_sites(const std::filesystem::path& path);
void write_site_points(const std::filesystem::path& path, const std::vector<SitePoint>& sites,
                       const StreamNetwork& net);
std::vector<SitePoint> read_site_points(const std::filesystem::path& path,
                                        const StreamNetwork& net);

// Network persisted as a directory of flat tables plus a JSON manifest recording
// precision and cleaning steps.
void save_network(const std::filesystem::path& dir, const StreamNetwork& net,
                  const std::string& config_hash = {});
StreamNetwork load_network(const std::filesystem::path& dir);

void save_neighbor_graph(const std::filesystem::path& path, const NeighborGraph& graph,
                         const std::vector<SitePoint>& obs, const std::string& config_hash = {});
NeighborGraph load_neighbor_graph(const std::filesystem::path& path,
                                  const std::vector<SitePoint>& obs);

void save_fit(const std::filesystem::path& path, const FitResult& fit,
              const std::string& config_hash = {});
FitResult load_fit(const std::filesystem::path& path);

void write_predictions(const std::filesystem::path& path,
                       const std::vector<PredictionRecord>& records);
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);

// FNV-1a over a canonical string; used to stamp artifacts with their config+input identity.
std::string content_hash(const std::string& data);
std::string file_hash(const std::filesystem::path& path);

}  // namespace io
}  // namespace s3n
