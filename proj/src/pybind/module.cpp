#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "s3n/pipeline.hpp"

namespace py = pybind11;
using namespace s3n;

namespace {

py::dict reach_dict(const StreamNetwork::Reach& r) {
  py::dict d;
  d["reach_id"] = r.reach_id;
  d["length"] = r.length;
  d["additive_attr"] = r.additive_attr;
  d["parent"] = r.parent;
  d["component"] = r.component;
  d["is_source"] = r.is_source;
  d["is_outlet"] = r.is_outlet;
  d["updist_dn"] = r.updist_dn;
  d["afv"] = r.afv;
  return d;
}

}  // namespace

PYBIND11_MODULE(_s3n, m) {
  m.doc() = "Stream-network Gaussian process toolkit (native core)";

  py::register_exception<TopologyError>(m, "TopologyError");
  py::register_exception<ValidationError>(m, "ValidationError");
  py::register_exception<FactorizationError>(m, "FactorizationError");

  py::class_<Flowline>(m, "Flowline")
      .def(py::init([](std::int64_t reach_id, std::vector<Point> vertices, double length,
                       double additive_attr) {
             return Flowline{reach_id, std::move(vertices), length, additive_attr};
           }),
           py::arg("reach_id"), py::arg("vertices"), py::arg("length"), py::arg("additive_attr"))
      .def_readwrite("reach_id", &Flowline::reach_id)
      .def_readwrite("vertices", &Flowline::vertices)
      .def_readwrite("length", &Flowline::length)
      .def_readwrite("additive_attr", &Flowline::additive_attr);

  py::class_<NetworkConfig>(m, "NetworkConfig")
      .def(py::init<>())
      .def_readwrite("precision", &NetworkConfig::precision)
      .def_readwrite("fix_complex_confluences", &NetworkConfig::fix_complex_confluences)
      .def_readwrite("largest_component_only", &NetworkConfig::largest_component_only);

  py::class_<StreamNetwork>(m, "StreamNetwork")
      .def_static("build", &StreamNetwork::build, py::arg("flowlines"),
                  py::arg("config") = NetworkConfig{})
      .def_property_readonly("n_reaches", &StreamNetwork::size)
      .def_property_readonly("n_components", &StreamNetwork::n_components)
      .def_property_readonly("retained_fraction", &StreamNetwork::retained_fraction)
      .def_property_readonly("cleaning_log", &StreamNetwork::cleaning_log)
      .def("index_of", &StreamNetwork::index_of, py::arg("reach_id"))
      .def("reach", [](const StreamNetwork& net, int idx) { return reach_dict(net.reach(idx)); },
           py::arg("index"))
      .def("reaches",
           [](const StreamNetwork& net) {
             py::list out;
             for (const auto& r : net.reaches()) out.append(reach_dict(r));
             return out;
           })
      .def("lca", &StreamNetwork::lca, py::arg("a"), py::arg("b"))
      .def("upstream_or_equal", &StreamNetwork::upstream_or_equal, py::arg("a"), py::arg("b"));

  py::class_<SiteInput>(m, "SiteInput")
      .def(py::init<>())
      .def_readwrite("site_id", &SiteInput::site_id)
      .def_readwrite("coords", &SiteInput::coords)
      .def_readwrite("reach_id", &SiteInput::reach_id)
      .def_readwrite("ratio", &SiteInput::ratio)
      .def_readwrite("x", &SiteInput::x)
      .def_readwrite("y", &SiteInput::y);

  py::class_<SitePoint>(m, "SitePoint")
      .def(py::init<>())
      .def_readwrite("site_id", &SitePoint::site_id)
      .def_readwrite("reach", &SitePoint::reach)
      .def_readwrite("ratio", &SitePoint::ratio)
      .def_readwrite("updist", &SitePoint::updist)
      .def_readwrite("afv", &SitePoint::afv)
      .def_readwrite("snap_dist", &SitePoint::snap_dist)
      .def_readwrite("x", &SitePoint::x)
      .def_readwrite("y", &SitePoint::y);

  py::class_<SnapConfig>(m, "SnapConfig")
      .def(py::init<>())
      .def_readwrite("max_snap_dist", &SnapConfig::max_snap_dist);
  m.def("place_site", &place_site, py::arg("input"), py::arg("net"),
        py::arg("config") = SnapConfig{});
  m.def("snap_sites", &snap_sites, py::arg("inputs"), py::arg("net"),
        py::arg("config") = SnapConfig{});
  m.def("reach_midpoints", &reach_midpoints, py::arg("net"),
        py::arg("excluded_reach_ids") = std::vector<std::int64_t>{});

  py::class_<PairGeometry>(m, "PairGeometry")
      .def_readonly("flow_connected", &PairGeometry::flow_connected)
      .def_readonly("h", &PairGeometry::h)
      .def_readonly("total_dist", &PairGeometry::total_dist)
      .def_readonly("weight", &PairGeometry::weight);
  m.def("pair_geometry", &pair_geometry, py::arg("a"), py::arg("b"), py::arg("net"));

  m.def("order_sites",
        [](const std::vector<SitePoint>& obs, const std::string& scheme, std::uint64_t seed) {
          return order_sites(obs, parse_order_scheme(scheme), seed);
        },
        py::arg("obs"), py::arg("scheme") = "updist", py::arg("seed") = 0);

  py::class_<NeighborEntry>(m, "NeighborEntry")
      .def_readonly("site", &NeighborEntry::site)
      .def_readonly("geom", &NeighborEntry::geom);
  py::class_<NeighborGraph>(m, "NeighborGraph")
      .def_readonly("order", &NeighborGraph::order)
      .def_readonly("m", &NeighborGraph::m)
      .def_readonly("neighbors", &NeighborGraph::neighbors);
  m.def("build_neighbor_graph",
        [](const std::vector<SitePoint>& obs, const std::vector<int>& order, int m,
           const StreamNetwork& net, const std::string& metric) {
          return build_neighbor_graph(obs, order, m, net, parse_nn_metric(metric));
        },
        py::arg("obs"), py::arg("order"), py::arg("m"), py::arg("net"),
        py::arg("metric") = "total");
  m.def("predict_neighbors",
        [](const std::vector<SitePoint>& preds, const std::vector<SitePoint>& obs, int m,
           const StreamNetwork& net, int batch_size, const std::string& metric) {
          return predict_neighbors(preds, obs, m, net, batch_size, parse_nn_metric(metric));
        },
        py::arg("preds"), py::arg("obs"), py::arg("m"), py::arg("net"),
        py::arg("batch_size") = 5000, py::arg("metric") = "total");

  py::class_<CovarianceParams>(m, "CovarianceParams")
      .def(py::init<>())
      .def_readwrite("sigma2", &CovarianceParams::sigma2)
      .def_readwrite("lambda_", &CovarianceParams::lambda)
      .def_readwrite("tau2", &CovarianceParams::tau2)
      .def_readwrite("beta", &CovarianceParams::beta)
      .def("validate", &CovarianceParams::validate);
  m.def("cov_block", &cov_block, py::arg("rows"), py::arg("cols"), py::arg("params"),
        py::arg("net"));

  py::class_<VecchiaContext>(m, "VecchiaContext")
      .def(py::init<const NeighborGraph&, const std::vector<SitePoint>&, const StreamNetwork&>(),
           py::arg("graph"), py::arg("obs"), py::arg("net"))
      .def_property_readonly("n", &VecchiaContext::n)
      .def("median_neighbor_dist", &VecchiaContext::median_neighbor_dist);

  py::class_<OptimizerConfig>(m, "OptimizerConfig")
      .def(py::init<>())
      .def_readwrite("max_iter", &OptimizerConfig::max_iter)
      .def_readwrite("tol", &OptimizerConfig::tol)
      .def_readwrite("init_step", &OptimizerConfig::init_step);

  py::class_<FitResult::Interval>(m, "Interval")
      .def_readonly("lo", &FitResult::Interval::lo)
      .def_readonly("hi", &FitResult::Interval::hi);
  py::class_<FitResult>(m, "FitResult")
      .def_readonly("params", &FitResult::params)
      .def_readonly("beta_cov", &FitResult::beta_cov)
      .def_readonly("loglik", &FitResult::loglik)
      .def_readonly("converged", &FitResult::converged)
      .def_readonly("iterations", &FitResult::iterations)
      .def_readonly("n_evals", &FitResult::n_evals)
      .def_readonly("ci_sigma2", &FitResult::ci_sigma2)
      .def_readonly("ci_lambda", &FitResult::ci_lambda)
      .def_readonly("ci_tau2", &FitResult::ci_tau2)
      .def_readonly("bootstrap_reps", &FitResult::bootstrap_reps)
      .def_readonly("bootstrap_dropped", &FitResult::bootstrap_dropped)
      .def_readonly("timings", &FitResult::timings);

  m.def("fit", &fit, py::arg("ctx"), py::arg("X"), py::arg("y"), py::arg("init") = std::nullopt,
        py::arg("config") = OptimizerConfig{});
  m.def("bootstrap_ci",
        [](FitResult& result, const VecchiaContext& ctx, const Eigen::MatrixXd& X,
           const Eigen::VectorXd& y, int B, std::uint64_t seed, const std::string& mode,
           const OptimizerConfig& config) {
          bootstrap_ci(result, ctx, X, y, B, seed,
                       mode == "normal" ? BootstrapMode::Normal : BootstrapMode::Resample, config);
          return result;
        },
        py::arg("result"), py::arg("ctx"), py::arg("X"), py::arg("y"), py::arg("B"),
        py::arg("seed") = 0, py::arg("mode") = "resample", py::arg("config") = OptimizerConfig{});

  py::class_<PredictionRecord>(m, "PredictionRecord")
      .def_readonly("site_id", &PredictionRecord::site_id)
      .def_readonly("reach_id", &PredictionRecord::reach_id)
      .def_readonly("mean", &PredictionRecord::mean)
      .def_readonly("var", &PredictionRecord::var)
      .def_readonly("clamped_mean", &PredictionRecord::clamped_mean)
      .def_readonly("reach_contribution", &PredictionRecord::reach_contribution)
      .def_readonly("no_neighbors", &PredictionRecord::no_neighbors);
  m.def("predict", &predict, py::arg("preds"), py::arg("obs"), py::arg("params"),
        py::arg("pred_neighbors"), py::arg("net"), py::arg("per_100m_scale") = 100.0);

  py::class_<RegionalSummary>(m, "RegionalSummary")
      .def_readonly("total", &RegionalSummary::total)
      .def_readonly("negative_fraction", &RegionalSummary::negative_fraction)
      .def_readonly("n_records", &RegionalSummary::n_records);
  m.def("regional_total", &regional_total, py::arg("records"), py::arg("net"));

  py::class_<SyntheticNetworkSpec>(m, "SyntheticNetworkSpec")
      .def(py::init<>())
      .def_readwrite("n_reaches", &SyntheticNetworkSpec::n_reaches)
      .def_readwrite("branching_prob", &SyntheticNetworkSpec::branching_prob)
      .def_readwrite("length_dist", &SyntheticNetworkSpec::length_dist)
      .def_readwrite("attribute_dist", &SyntheticNetworkSpec::attribute_dist)
      .def_readwrite("seed", &SyntheticNetworkSpec::seed);
  m.def("generate_network", &generate_network, py::arg("spec"));
  m.def("simulate_ssn",
        [](const StreamNetwork& net, std::vector<SitePoint> obs, const CovarianceParams& params,
           std::uint64_t seed) {
          auto sim = simulate_ssn(net, obs, params, seed);
          return py::make_tuple(sim.X, sim.y, obs);
        },
        py::arg("net"), py::arg("obs"), py::arg("params"), py::arg("seed") = 0,
        "Returns (X, y, sites) with covariates and responses written into the sites.");

  m.def("read_flowlines", &io::read_flowlines, py::arg("path"));
  m.def("write_flowlines", &io::write_flowlines, py::arg("path"), py::arg("flowlines"));
  m.def("read_sites", &io::read_sites, py::arg("path"));
  m.def("save_network", &io::save_network, py::arg("dir"), py::arg("net"),
        py::arg("config_hash") = std::string{});
  m.def("load_network", &io::load_network, py::arg("dir"));

  py::class_<PipelineConfig>(m, "PipelineConfig")
      .def(py::init<>())
      .def_readwrite("flowlines", &PipelineConfig::flowlines)
      .def_readwrite("sites", &PipelineConfig::sites)
      .def_readwrite("out_dir", &PipelineConfig::out_dir)
      .def_readwrite("precision", &PipelineConfig::precision)
      .def_readwrite("fix_complex_confluences", &PipelineConfig::fix_complex_confluences)
      .def_readwrite("largest_component_only", &PipelineConfig::largest_component_only)
      .def_readwrite("snap_threshold", &PipelineConfig::snap_threshold)
      .def_readwrite("m", &PipelineConfig::m)
      .def_readwrite("order_scheme", &PipelineConfig::order_scheme)
      .def_readwrite("nn_metric", &PipelineConfig::nn_metric)
      .def_readwrite("batch_size", &PipelineConfig::batch_size)
      .def_readwrite("max_iter", &PipelineConfig::max_iter)
      .def_readwrite("tol", &PipelineConfig::tol)
      .def_readwrite("bootstrap_B", &PipelineConfig::bootstrap_B)
      .def_readwrite("seed", &PipelineConfig::seed)
      .def_readwrite("bootstrap_mode", &PipelineConfig::bootstrap_mode)
      .def_readwrite("per_100m_scale", &PipelineConfig::per_100m_scale);
  py::class_<PipelineResult>(m, "PipelineResult")
      .def_readonly("stage_seconds", &PipelineResult::stage_seconds)
      .def_readonly("stage_cached", &PipelineResult::stage_cached)
      .def_readonly("fit", &PipelineResult::fit)
      .def_readonly("regional", &PipelineResult::regional)
      .def_readonly("summary_path", &PipelineResult::summary_path);
  m.def("run_pipeline", &run_pipeline, py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
}
