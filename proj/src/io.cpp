#include "s3n/io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace s3n {
namespace io {

using nlohmann::json;

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(field);
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.push_back(field);
  return out;
}

std::vector<Point> parse_linestring(const std::string& wkt) {
  if (wkt.find("LINESTRING") == std::string::npos)
    throw ValidationError("expected LINESTRING geometry, got: " + wkt);
  auto open = wkt.find('(');
  auto close = wkt.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close <= open)
    throw ValidationError("malformed LINESTRING: " + wkt);
  std::string body = wkt.substr(open + 1, close - open - 1);
  std::vector<Point> pts;
  std::stringstream ss(body);
  std::string pair;
  while (std::getline(ss, pair, ',')) {
    std::stringstream ps(pair);
    Point p;
    if (!(ps >> p[0] >> p[1])) throw ValidationError("malformed coordinate in: " + wkt);
    pts.push_back(p);
  }
  return pts;
}

std::string to_linestring(const std::vector<Point>& pts) {
  std::ostringstream os;
  os.precision(12);
  os << "LINESTRING (";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) os << ", ";
    os << pts[i][0] << " " << pts[i][1];
  }
  os << ")";
  return os.str();
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

}  // namespace

std::vector<Flowline> read_flowlines(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<Flowline> out;
  std::string line;
  if (path.extension() == ".ndjson" || path.extension() == ".jsonl") {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line);
      Flowline fl;
      fl.reach_id = j.at("reach_id").get<std::int64_t>();
      fl.length = j.at("length_m").get<double>();
      fl.additive_attr = j.at("additive_attr").get<double>();
      for (const auto& c : j.at("coords")) fl.vertices.push_back({c[0], c[1]});
      out.push_back(std::move(fl));
    }
    return out;
  }
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv(line);
    if (f.size() < 4) throw ValidationError("flowline row with fewer than 4 columns");
    Flowline fl;
    fl.reach_id = std::stoll(f[0]);
    fl.length = std::stod(f[1]);
    fl.additive_attr = std::stod(f[2]);
    fl.vertices = parse_linestring(f[3]);
    out.push_back(std::move(fl));
  }
  return out;
}

void write_flowlines(const std::filesystem::path& path, const std::vector<Flowline>& flowlines) {
  auto out = open_out(path);
  if (path.extension() == ".ndjson" || path.extension() == ".jsonl") {
    for (const auto& fl : flowlines) {
      json j;
      j["reach_id"] = fl.reach_id;
      j["length_m"] = fl.length;
      j["additive_attr"] = fl.additive_attr;
      auto coords = json::array();
      for (const auto& v : fl.vertices) coords.push_back({v[0], v[1]});
      j["coords"] = coords;
      out << j.dump() << "\n";
    }
    return;
  }
  out << "reach_id,length_m,additive_attr,wkt\n";
  out.precision(12);
  for (const auto& fl : flowlines)
    out << fl.reach_id << "," << fl.length << "," << fl.additive_attr << ",\""
        << to_linestring(fl.vertices) << "\"\n";
}

std::vector<SiteInput> read_sites(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  std::getline(in, line);
  auto header = split_csv(line);
  auto col = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  };
  int c_id = col("site_id"), c_x = col("x"), c_y = col("y");
  int c_reach = col("reach_id"), c_ratio = col("ratio"), c_obs = col("y_obs");
  std::vector<int> cov_cols;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i].rfind("cov_", 0) == 0) cov_cols.push_back(static_cast<int>(i));
  if (c_id < 0) throw ValidationError("sites CSV: missing site_id column");

  std::vector<SiteInput> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv(line);
    auto get = [&](int c) -> std::optional<double> {
      if (c < 0 || c >= static_cast<int>(f.size()) || f[c].empty()) return std::nullopt;
      return std::stod(f[c]);
    };
    SiteInput s;
    s.site_id = std::stoll(f[c_id]);
    auto x = get(c_x), y = get(c_y);
    if (x && y) s.coords = Point{*x, *y};
    if (auto r = get(c_reach)) s.reach_id = static_cast<std::int64_t>(*r);
    if (auto r = get(c_ratio)) s.ratio = *r;
    s.y = get(c_obs);
    s.x.push_back(1.0);  // intercept
    for (int c : cov_cols) s.x.push_back(get(c).value_or(0.0));
    out.push_back(std::move(s));
  }
  return out;
}

void write_site_points(const std::filesystem::path& path, const std::vector<SitePoint>& sites,
                       const StreamNetwork& net) {
  auto out = open_out(path);
  out.precision(17);
  std::size_t p = sites.empty() ? 0 : sites.front().x.size();
  out << "site_id,reach_id,ratio,updist,afv,snap_dist,y_obs";
  for (std::size_t j = 1; j < p; ++j) out << ",cov_" << j;
  out << "\n";
  for (const auto& s : sites) {
    out << s.site_id << "," << net.reach(s.reach).reach_id << "," << s.ratio << "," << s.updist
        << "," << s.afv << "," << s.snap_dist << ",";
    if (s.y) out << *s.y;
    for (std::size_t j = 1; j < s.x.size(); ++j) out << "," << s.x[j];
    out << "\n";
  }
}

std::vector<SitePoint> read_site_points(const std::filesystem::path& path,
                                        const StreamNetwork& net) {
  auto in = open_in(path);
  std::string line;
  std::getline(in, line);
  auto header = split_csv(line);
  std::vector<SitePoint> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv(line);
    SitePoint s;
    s.site_id = std::stoll(f[0]);
    s.reach = net.index_of(std::stoll(f[1]));
    s.ratio = std::stod(f[2]);
    s.updist = std::stod(f[3]);
    s.afv = std::stod(f[4]);
    s.snap_dist = std::stod(f[5]);
    if (!f[6].empty()) s.y = std::stod(f[6]);
    s.x.push_back(1.0);
    for (std::size_t j = 7; j < f.size(); ++j) s.x.push_back(std::stod(f[j]));
    out.push_back(std::move(s));
  }
  return out;
}

void save_network(const std::filesystem::path& dir, const StreamNetwork& net,
                  const std::string& config_hash) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "reaches.csv");
    out.precision(17);
    out << "reach_id,length_m,additive_attr,parent_id,component,is_source,is_outlet,"
           "updist_dn,afv,wkt\n";
    for (const auto& r : net.reaches()) {
      out << r.reach_id << "," << r.length << "," << r.additive_attr << ","
          << (r.parent >= 0 ? std::to_string(net.reach(r.parent).reach_id) : "") << ","
          << r.component << "," << r.is_source << "," << r.is_outlet << "," << r.updist_dn << ","
          << r.afv << ",\"" << to_linestring(r.vertices) << "\"\n";
    }
  }
  json manifest;
  manifest["precision"] = net.config().precision;
  manifest["fix_complex_confluences"] = net.config().fix_complex_confluences;
  manifest["largest_component_only"] = net.config().largest_component_only;
  manifest["n_reaches"] = net.size();
  manifest["n_components"] = net.n_components();
  manifest["cleaning_log"] = net.cleaning_log();
  manifest["retained_fraction"] = net.retained_fraction();
  manifest["config_hash"] = config_hash;
  open_out(dir / "manifest.json") << manifest.dump(2) << "\n";
}

StreamNetwork load_network(const std::filesystem::path& dir) {
  json manifest = json::parse(open_in(dir / "manifest.json"));
  NetworkConfig cfg;
  cfg.precision = manifest.at("precision").get<int>();
  // cleaning already applied before the save; do not reapply on reload
  auto in = open_in(dir / "reaches.csv");
  std::string line;
  std::getline(in, line);
  std::vector<Flowline> flowlines;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv(line);
    Flowline fl;
    fl.reach_id = std::stoll(f[0]);
    fl.length = std::stod(f[1]);
    fl.additive_attr = std::stod(f[2]);
    fl.vertices = parse_linestring(f[9]);
    flowlines.push_back(std::move(fl));
  }
  return StreamNetwork::build(std::move(flowlines), cfg);
}

void save_neighbor_graph(const std::filesystem::path& path, const NeighborGraph& graph,
                         const std::vector<SitePoint>& obs, const std::string& config_hash) {
  auto out = open_out(path);
  out.precision(17);
  out << "site_i,site_j,flow_connected,h,total_dist,weight\n";
  for (std::size_t k = 0; k < graph.order.size(); ++k) {
    std::int64_t si = obs[graph.order[k]].site_id;
    for (const auto& e : graph.neighbors[k]) {
      const auto& g = e.geom;
      out << si << "," << obs[e.site].site_id << "," << g.flow_connected << "," << g.h << ","
          << g.total_dist << "," << g.weight << "\n";
    }
  }
  json manifest;
  manifest["m"] = graph.m;
  manifest["metric"] = nn_metric_name(graph.metric);
  std::vector<std::int64_t> order_ids;
  for (int i : graph.order) order_ids.push_back(obs[i].site_id);
  manifest["order"] = order_ids;
  manifest["config_hash"] = config_hash;
  auto mpath = path;
  mpath.replace_extension(".manifest.json");
  open_out(mpath) << manifest.dump(2) << "\n";
}

NeighborGraph load_neighbor_graph(const std::filesystem::path& path,
                                  const std::vector<SitePoint>& obs) {
  auto mpath = path;
  mpath.replace_extension(".manifest.json");
  json manifest = json::parse(open_in(mpath));

  std::unordered_map<std::int64_t, int> idx;
  for (std::size_t i = 0; i < obs.size(); ++i) idx[obs[i].site_id] = static_cast<int>(i);

  NeighborGraph g;
  g.m = manifest.at("m").get<int>();
  g.metric = parse_nn_metric(manifest.at("metric").get<std::string>());
  std::unordered_map<std::int64_t, int> pos;
  for (const auto& sid : manifest.at("order")) {
    std::int64_t id = sid.get<std::int64_t>();
    pos[id] = static_cast<int>(g.order.size());
    g.order.push_back(idx.at(id));
  }
  g.neighbors.resize(g.order.size());

  auto in = open_in(path);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv(line);
    NeighborEntry e;
    std::int64_t si = std::stoll(f[0]);
    e.site = idx.at(std::stoll(f[1]));
    e.geom.flow_connected = f[2] == "1";
    e.geom.h = std::stod(f[3]);
    e.geom.total_dist = std::stod(f[4]);
    e.geom.weight = std::stod(f[5]);
    g.neighbors[pos.at(si)].push_back(std::move(e));
  }
  return g;
}

void save_fit(const std::filesystem::path& path, const FitResult& fit,
              const std::string& config_hash) {
  json j;
  j["kernel"] = kDefaultKernel;
  j["sigma2"] = fit.params.sigma2;
  j["lambda"] = fit.params.lambda;
  j["tau2"] = fit.params.tau2;
  j["beta"] = std::vector<double>(fit.params.beta.data(),
                                  fit.params.beta.data() + fit.params.beta.size());
  std::vector<std::vector<double>> bc;
  for (int i = 0; i < fit.beta_cov.rows(); ++i)
    bc.emplace_back(fit.beta_cov.row(i).begin(), fit.beta_cov.row(i).end());
  j["beta_cov"] = bc;
  j["loglik"] = fit.loglik;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["n_evals"] = fit.n_evals;
  auto put_ci = [&](const char* name, const std::optional<FitResult::Interval>& ci) {
    if (ci) j[name] = {ci->lo, ci->hi};
  };
  put_ci("ci_sigma2", fit.ci_sigma2);
  put_ci("ci_lambda", fit.ci_lambda);
  put_ci("ci_tau2", fit.ci_tau2);
  j["bootstrap_reps"] = fit.bootstrap_reps;
  j["bootstrap_dropped"] = fit.bootstrap_dropped;
  j["timings"] = fit.timings;
  j["config_hash"] = config_hash;
  open_out(path) << j.dump(2) << "\n";
}

FitResult load_fit(const std::filesystem::path& path) {
  json j = json::parse(open_in(path));
  FitResult fit;
  fit.params.sigma2 = j.at("sigma2").get<double>();
  fit.params.lambda = j.at("lambda").get<double>();
  fit.params.tau2 = j.at("tau2").get<double>();
  auto beta = j.at("beta").get<std::vector<double>>();
  fit.params.beta = Eigen::Map<Eigen::VectorXd>(beta.data(), beta.size());
  auto bc = j.at("beta_cov").get<std::vector<std::vector<double>>>();
  fit.beta_cov.resize(bc.size(), bc.size());
  for (std::size_t i = 0; i < bc.size(); ++i)
    for (std::size_t k = 0; k < bc[i].size(); ++k) fit.beta_cov(i, k) = bc[i][k];
  fit.loglik = j.at("loglik").get<double>();
  fit.converged = j.at("converged").get<bool>();
  fit.iterations = j.at("iterations").get<int>();
  auto get_ci = [&](const char* name) -> std::optional<FitResult::Interval> {
    if (!j.contains(name)) return std::nullopt;
    return FitResult::Interval{j[name][0].get<double>(), j[name][1].get<double>()};
  };
  fit.ci_sigma2 = get_ci("ci_sigma2");
  fit.ci_lambda = get_ci("ci_lambda");
  fit.ci_tau2 = get_ci("ci_tau2");
  fit.n_evals = j.value("n_evals", 0);
  fit.bootstrap_reps = j.value("bootstrap_reps", 0);
  fit.bootstrap_dropped = j.value("bootstrap_dropped", 0);
  if (j.contains("timings")) fit.timings = j["timings"].get<std::map<std::string, double>>();
  return fit;
}

void write_predictions(const std::filesystem::path& path,
                       const std::vector<PredictionRecord>& records) {
  auto out = open_out(path);
  out.precision(17);
  out << "site_id,reach_id,mean,var,clamped_mean,reach_contribution,no_neighbors\n";
  for (const auto& r : records)
    out << r.site_id << "," << r.reach_id << "," << r.mean << "," << r.var << ","
        << r.clamped_mean << "," << r.reach_contribution << "," << (r.no_neighbors ? 1 : 0)
        << "\n";
}

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  std::getline(in, line);
  std::vector<PredictionRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv(line);
    PredictionRecord r;
    r.site_id = std::stoll(f[0]);
    r.reach_id = std::stoll(f[1]);
    r.mean = std::stod(f[2]);
    r.var = std::stod(f[3]);
    r.clamped_mean = std::stod(f[4]);
    r.reach_contribution = std::stod(f[5]);
    if (f.size() > 6) r.no_neighbors = f[6] == "1";
    out.push_back(r);
  }
  return out;
}

std::string content_hash(const std::string& data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_hash(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return content_hash(ss.str());
}

}  // namespace io
}  // namespace s3n
