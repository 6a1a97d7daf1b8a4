#include <algorithm>
#include <fstream>
#include <iostream>
#include <random>

#include <CLI11.hpp>
#include <json.hpp>

#include "s3n/pipeline.hpp"

using namespace s3n;

// exit codes: 1 usage/input, 2 topology, 3 numerical
namespace {

template <typename Fn>
int run_guarded(Fn&& fn) {
  try {
    fn();
    return 0;
  } catch (const TopologyError& e) {
    std::cerr << "topology error: " << e.what() << "\n";
    return 2;
  } catch (const FactorizationError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"S3N: scalable spatial stream network models"};
  app.require_subcommand(1);

  // ---- preprocess ----
  std::string flowlines_path, out_dir = "network";
  int precision = 3;
  bool fix_cc = false, largest_only = false;
  auto* preprocess = app.add_subcommand("preprocess", "Build the stream network from flowlines");
  preprocess->add_option("--flowlines", flowlines_path)->required();
  preprocess->add_option("--out", out_dir);
  preprocess->add_option("--precision", precision);
  preprocess->add_flag("--fix-complex-confluences", fix_cc);
  preprocess->add_flag("--largest-component-only", largest_only);

  // ---- sites ----
  std::string network_dir = "network", sites_path, sites_out = "sites_out.csv";
  double snap_threshold = 500.0;
  auto* sites_cmd = app.add_subcommand("sites", "Map observation/prediction sites onto the network");
  sites_cmd->add_option("--network", network_dir)->required();
  sites_cmd->add_option("--sites", sites_path)->required();
  sites_cmd->add_option("--out", sites_out);
  sites_cmd->add_option("--snap-threshold", snap_threshold);

  // ---- distances ----
  std::string dist_out = "neighbors.csv", order_scheme = "updist", nn_metric = "total";
  int m = 15, batch_size = 5000;
  std::uint64_t seed = 0;
  auto* distances = app.add_subcommand("distances", "Build the stream-distance neighbor graph");
  distances->add_option("--network", network_dir)->required();
  distances->add_option("--sites", sites_path)->required();
  distances->add_option("--out", dist_out);
  distances->add_option("--m", m);
  distances->add_option("--order", order_scheme);
  distances->add_option("--nn-metric", nn_metric);
  distances->add_option("--batch-size", batch_size);
  distances->add_option("--seed", seed);

  // ---- fit ----
  std::string fit_out = "fit.json", neighbors_path = "neighbors.csv";
  int max_iter = 500, bootstrap_B = 0;
  double tol = 1e-8;
  std::string bootstrap_mode = "resample";
  auto* fit_cmd = app.add_subcommand("fit", "Maximum-likelihood estimation");
  fit_cmd->add_option("--network", network_dir)->required();
  fit_cmd->add_option("--sites", sites_path)->required();
  fit_cmd->add_option("--neighbors", neighbors_path)->required();
  fit_cmd->add_option("--out", fit_out);
  fit_cmd->add_option("--m", m);
  fit_cmd->add_option("--max-iter", max_iter);
  fit_cmd->add_option("--tol", tol);
  fit_cmd->add_option("--bootstrap", bootstrap_B);
  fit_cmd->add_option("--bootstrap-mode", bootstrap_mode);
  fit_cmd->add_option("--seed", seed);

  // ---- predict ----
  std::string fit_path = "fit.json", pred_sites_path, pred_out = "predictions.csv";
  auto* predict_cmd = app.add_subcommand("predict", "Kriging prediction at unobserved sites");
  predict_cmd->add_option("--network", network_dir)->required();
  predict_cmd->add_option("--sites", sites_path)->required();
  predict_cmd->add_option("--pred-sites", pred_sites_path);
  predict_cmd->add_option("--fit", fit_path)->required();
  predict_cmd->add_option("--out", pred_out);
  predict_cmd->add_option("--m", m);
  predict_cmd->add_option("--batch-size", batch_size);

  // ---- aggregate ----
  std::string predictions_path = "predictions.csv", agg_out = "regional.json";
  auto* aggregate = app.add_subcommand("aggregate", "Regional totals from predictions");
  aggregate->add_option("--network", network_dir)->required();
  aggregate->add_option("--predictions", predictions_path)->required();
  aggregate->add_option("--out", agg_out);

  // ---- simulate ----
  int n_reaches = 1000, n_obs = 0;
  double branching = 0.3, beta0 = 0.5, beta1 = -44.0, sigma2 = 5.0, lambda = 0.1, tau2 = 5.0;
  double len_min = 0.05, len_max = 0.15;
  std::string sim_flowlines = "flowlines.csv", sim_sites = "sites.csv";
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic network and responses");
  simulate->add_option("--reaches", n_reaches);
  simulate->add_option("--obs", n_obs);
  simulate->add_option("--branching-prob", branching);
  simulate->add_option("--length-min", len_min);
  simulate->add_option("--length-max", len_max);
  simulate->add_option("--beta0", beta0);
  simulate->add_option("--beta1", beta1);
  simulate->add_option("--sigma2", sigma2);
  simulate->add_option("--lambda", lambda);
  simulate->add_option("--tau2", tau2);
  simulate->add_option("--seed", seed);
  simulate->add_option("--out-flowlines", sim_flowlines);
  simulate->add_option("--out-sites", sim_sites);

  // ---- bench ----
  std::vector<int> reach_counts{1000, 10000, 100000};
  std::vector<int> obs_counts{1000, 10000, 100000};
  int replicates = 1;
  std::string bench_out = "bench.csv";
  auto* bench = app.add_subcommand("bench", "Scaling benchmark with log-log slope fits");
  bench->add_option("--reach-counts", reach_counts);
  bench->add_option("--obs-counts", obs_counts);
  bench->add_option("--replicates", replicates);
  bench->add_option("--m", m);
  bench->add_option("--seed", seed);
  bench->add_option("--out", bench_out);

  // ---- pipeline ----
  auto* pipeline = app.add_subcommand("pipeline", "Full batch run with stage caching");
  pipeline->add_option("--flowlines", flowlines_path)->required();
  pipeline->add_option("--sites", sites_path)->required();
  pipeline->add_option("--out", out_dir);
  pipeline->add_option("--precision", precision);
  pipeline->add_flag("--fix-complex-confluences", fix_cc);
  pipeline->add_flag("--largest-component-only", largest_only);
  pipeline->add_option("--snap-threshold", snap_threshold);
  pipeline->add_option("--m", m);
  pipeline->add_option("--order", order_scheme);
  pipeline->add_option("--nn-metric", nn_metric);
  pipeline->add_option("--batch-size", batch_size);
  pipeline->add_option("--max-iter", max_iter);
  pipeline->add_option("--tol", tol);
  pipeline->add_option("--bootstrap", bootstrap_B);
  pipeline->add_option("--seed", seed);

  CLI11_PARSE(app, argc, argv);

  if (preprocess->parsed()) {
    return run_guarded([&] {
      NetworkConfig cfg{precision, fix_cc, largest_only};
      auto net = StreamNetwork::build(io::read_flowlines(flowlines_path), cfg);
      io::save_network(out_dir, net);
      std::cout << "reaches: " << net.size() << "  components: " << net.n_components()
                << "  retained: " << net.retained_fraction() << "\n";
      for (const auto& line : net.cleaning_log()) std::cout << line << "\n";
    });
  }
  if (sites_cmd->parsed()) {
    return run_guarded([&] {
      auto net = io::load_network(network_dir);
      auto placed = snap_sites(io::read_sites(sites_path), net, {snap_threshold});
      io::write_site_points(sites_out, placed, net);
      std::cout << "placed " << placed.size() << " sites\n";
    });
  }
  if (distances->parsed()) {
    return run_guarded([&] {
      auto net = io::load_network(network_dir);
      auto obs = io::read_site_points(sites_path, net);
      auto order = order_sites(obs, parse_order_scheme(order_scheme), seed);
      auto graph = build_neighbor_graph(obs, order, m, net, parse_nn_metric(nn_metric));
      io::save_neighbor_graph(dist_out, graph, obs);
      std::cout << "neighbor graph for " << obs.size() << " sites, m=" << m << "\n";
    });
  }
  if (fit_cmd->parsed()) {
    return run_guarded([&] {
      auto net = io::load_network(network_dir);
      auto obs = io::read_site_points(sites_path, net);
      auto graph = io::load_neighbor_graph(neighbors_path, obs);
      const int n = static_cast<int>(obs.size());
      const int p = static_cast<int>(obs.front().x.size());
      Eigen::MatrixXd X(n, p);
      Eigen::VectorXd y(n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) X(i, j) = obs[i].x[j];
        if (!obs[i].y) throw ValidationError("fit: site without y_obs");
        y[i] = *obs[i].y;
      }
      VecchiaContext ctx(graph, obs, net);
      auto result = fit(ctx, X, y, std::nullopt, {max_iter, tol});
      if (bootstrap_B > 0) {
        auto mode = bootstrap_mode == "normal" ? BootstrapMode::Normal : BootstrapMode::Resample;
        bootstrap_ci(result, ctx, X, y, bootstrap_B, seed, mode, {max_iter, tol});
      }
      io::save_fit(fit_out, result);
      std::cout << "sigma2=" << result.params.sigma2 << " lambda=" << result.params.lambda
                << " tau2=" << result.params.tau2 << " loglik=" << result.loglik
                << " converged=" << result.converged << "\n";
    });
  }
  if (predict_cmd->parsed()) {
    return run_guarded([&] {
      auto net = io::load_network(network_dir);
      auto obs = io::read_site_points(sites_path, net);
      auto preds = pred_sites_path.empty() ? reach_midpoints(net)
                                           : io::read_site_points(pred_sites_path, net);
      auto result = io::load_fit(fit_path);
      if (pred_sites_path.empty())
        for (auto& s : preds) s.x.resize(result.params.beta.size(), 0.0);
      auto nbrs = predict_neighbors(preds, obs, m, net, batch_size);
      auto records = predict(preds, obs, result.params, nbrs, net);
      io::write_predictions(pred_out, records);
      std::cout << "predicted " << records.size() << " sites\n";
    });
  }
  if (aggregate->parsed()) {
    return run_guarded([&] {
      auto net = io::load_network(network_dir);
      auto records = io::read_predictions(predictions_path);
      auto summary = regional_total(records, net);
      nlohmann::json j;
      j["total"] = summary.total;
      j["negative_fraction"] = summary.negative_fraction;
      j["n_records"] = summary.n_records;
      std::ofstream(agg_out) << j.dump(2) << "\n";
      std::cout << "regional total " << summary.total << " (negative fraction "
                << summary.negative_fraction << ")\n";
    });
  }
  if (simulate->parsed()) {
    return run_guarded([&] {
      SyntheticNetworkSpec spec;
      spec.n_reaches = n_reaches;
      spec.branching_prob = branching;
      spec.length_dist = {len_min, len_max};
      spec.seed = seed;
      auto flowlines = generate_network(spec);
      io::write_flowlines(sim_flowlines, flowlines);
      auto net = StreamNetwork::build(flowlines, {});
      auto mids = reach_midpoints(net);
      if (n_obs <= 0) n_obs = std::min<int>(static_cast<int>(mids.size() + 1) / 2, 10000);
      std::mt19937_64 rng(seed + 1);
      std::shuffle(mids.begin(), mids.end(), rng);
      std::vector<SitePoint> obs(mids.begin(), mids.begin() + n_obs);
      CovarianceParams params;
      params.sigma2 = sigma2;
      params.lambda = lambda;
      params.tau2 = tau2;
      params.beta = Eigen::Vector2d(beta0, beta1);
      simulate_ssn(net, obs, params, seed + 2);
      io::write_site_points(sim_sites, obs, net);
      std::cout << "simulated " << obs.size() << " observations on " << net.size()
                << " reaches\n";
    });
  }
  if (bench->parsed()) {
    return run_guarded([&] {
      BenchmarkSpec spec;
      spec.reach_counts = reach_counts;
      spec.obs_counts = obs_counts;
      spec.replicates = replicates;
      spec.m = m;
      spec.seed = seed;
      spec.out_csv = bench_out;
      auto result = run_benchmark(spec);
      for (const auto& [stage, slope] : result.loglog_slope)
        std::cout << stage << " log-log slope: " << slope << "\n";
    });
  }
  if (pipeline->parsed()) {
    return run_guarded([&] {
      PipelineConfig cfg;
      cfg.flowlines = flowlines_path;
      cfg.sites = sites_path;
      cfg.out_dir = out_dir;
      cfg.precision = precision;
      cfg.fix_complex_confluences = fix_cc;
      cfg.largest_component_only = largest_only;
      cfg.snap_threshold = snap_threshold;
      cfg.m = m;
      cfg.order_scheme = order_scheme;
      cfg.nn_metric = nn_metric;
      cfg.batch_size = batch_size;
      cfg.max_iter = max_iter;
      cfg.tol = tol;
      cfg.bootstrap_B = bootstrap_B;
      cfg.seed = seed;
      auto result = run_pipeline(cfg);
      for (const auto& [name, secs] : result.stage_seconds)
        std::cout << name << ": " << secs << " s"
                  << (result.stage_cached.count(name) && result.stage_cached.at(name) ? " (cached)"
                                                                                      : "")
                  << "\n";
      std::cout << "summary: " << result.summary_path.string() << "\n";
    });
  }
  return 0;
}
