#pragma once

#include "s3n/io.hpp"
#include "s3n/simulate.hpp"

namespace s3n {

struct PipelineConfig {
  std::filesystem::path flowlines;
  std::filesystem::path sites;
  std::filesystem::path out_dir = "s3n_out";

  int precision = 3;
  bool fix_complex_confluences = false;
  bool largest_component_only = false;
  double snap_threshold = 500.0;

  int m = 15;
  std::string order_scheme = "updist";
  std::string nn_metric = "total";
  int batch_size = 5000;

  int max_iter = 500;
  double tol = 1e-8;
  int bootstrap_B = 0;  // 0 disables the bootstrap stage
  std::uint64_t seed = 0;
  std::string bootstrap_mode = "resample";

  double per_100m_scale = 100.0;

  // canonical serialization used for cache keys; timing-free and order-stable
  std::string canonical() const;
};

struct PipelineResult {
  std::map<std::string, double> stage_seconds;  // per-stage wall time
  std::map<std::string, bool> stage_cached;
  FitResult fit;
  RegionalSummary regional;
  std::filesystem::path summary_path;
};

// preprocess -> sites -> distances -> fit -> predict -> aggregate, with the
// network and distance stages cached on disk and reused across runs.
PipelineResult run_pipeline(const PipelineConfig& config);

struct BenchmarkSpec {
  std::vector<int> reach_counts = {1000, 10000, 100000};
  std::vector<int> obs_counts = {1000, 10000, 100000};
  int replicates = 1;
  int m = 15;
  std::uint64_t seed = 0;
  std::filesystem::path out_csv = "bench.csv";
};

struct BenchmarkResult {
  struct Row {
    std::string stage;
    int reach_count = 0;
    int obs_count = 0;
    int replicate = 0;
    double seconds = 0.0;
  };
  std::vector<Row> rows;
  std::map<std::string, double> loglog_slope;  // per stage, time vs size
};

// Times preprocessing over synthetic networks of increasing size and the sparse
// factor + likelihood evaluation over increasing observation counts at fixed m,
// then fits log-log slopes per stage.
BenchmarkResult run_benchmark(const BenchmarkSpec& spec);

}  // namespace s3n
