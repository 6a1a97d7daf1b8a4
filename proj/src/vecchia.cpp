#include "s3n/vecchia.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

namespace s3n {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;

double tailup(double h, double w, const CovarianceParams& p) {
  return w * p.sigma2 * std::exp(-h / p.lambda);
}
}  // namespace

VecchiaContext::VecchiaContext(const NeighborGraph& graph, const std::vector<SitePoint>& obs,
                               const StreamNetwork& net) {
  order_ = graph.order;
  rows_.resize(order_.size());
  std::vector<double> dists;
  for (std::size_t k = 0; k < order_.size(); ++k) {
    Row& row = rows_[k];
    const auto& entries = graph.neighbors[k];
    row.site_id = obs[order_[k]].site_id;
    const int nk = static_cast<int>(entries.size());
    row.nbr.reserve(nk);
    row.cross_h.reserve(nk);
    row.cross_w.reserve(nk);
    for (const auto& e : entries) {
      row.nbr.push_back(e.site);
      row.cross_h.push_back(e.geom.h);
      row.cross_w.push_back(e.geom.flow_connected ? e.geom.weight : 0.0);
      if (std::isfinite(e.geom.total_dist) && e.geom.total_dist > 0.0)
        dists.push_back(e.geom.total_dist);
    }
    row.within_h.reserve(nk * (nk - 1) / 2);
    row.within_w.reserve(nk * (nk - 1) / 2);
    for (int j = 0; j < nk; ++j)
      for (int l = j + 1; l < nk; ++l) {
        PairGeometry g = pair_geometry(obs[row.nbr[j]], obs[row.nbr[l]], net);
        row.within_h.push_back(g.h);
        row.within_w.push_back(g.flow_connected ? g.weight : 0.0);
      }
  }
  if (!dists.empty()) {
    auto mid = dists.begin() + dists.size() / 2;
    std::nth_element(dists.begin(), mid, dists.end());
    median_dist_ = *mid;
  }
}

double VecchiaContext::median_neighbor_dist() const { return median_dist_; }

VecchiaFactor VecchiaContext::factor(const CovarianceParams& params) const {
  params.validate();
  VecchiaFactor f;
  f.order = order_;
  const int n = static_cast<int>(rows_.size());
  f.nbr.resize(n);
  f.a.resize(n);
  f.d.resize(n);
  const double marginal = params.sigma2 + params.tau2;

  Eigen::MatrixXd block;
  Eigen::VectorXd cross;
  for (int k = 0; k < n; ++k) {
    const Row& row = rows_[k];
    const int nk = static_cast<int>(row.nbr.size());
    f.nbr[k] = row.nbr;
    if (nk == 0) {
      f.a[k] = Eigen::VectorXd();
      f.d[k] = marginal;
      continue;
    }
    block.resize(nk, nk);
    cross.resize(nk);
    int idx = 0;
    for (int j = 0; j < nk; ++j) {
      block(j, j) = marginal;
      for (int l = j + 1; l < nk; ++l, ++idx) {
        double c = tailup(row.within_h[idx], row.within_w[idx], params);
        block(j, l) = c;
        block(l, j) = c;
      }
      cross(j) = tailup(row.cross_h[j], row.cross_w[j], params);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(block);
    if (llt.info() != Eigen::Success) {
      block.diagonal().array() += 1e-10 * marginal;
      llt.compute(block);
      if (llt.info() != Eigen::Success)
        throw FactorizationError("neighbor block of site " + std::to_string(row.site_id) +
                                 " is not positive definite");
    }
    f.a[k] = llt.solve(cross);
    double d = marginal - cross.dot(f.a[k]);
    if (!(d > 0.0))
      throw FactorizationError("nonpositive conditional variance at site " +
                               std::to_string(row.site_id));
    f.d[k] = d;
  }
  return f;
}

Eigen::VectorXd VecchiaFactor::whiten(const Eigen::VectorXd& v) const {
  Eigen::VectorXd w(n());
  for (int k = 0; k < n(); ++k) {
    double acc = v[order[k]];
    const auto& ak = a[k];
    for (int j = 0; j < ak.size(); ++j) acc -= ak[j] * v[nbr[k][j]];
    w[k] = acc / std::sqrt(d[k]);
  }
  return w;
}

Eigen::VectorXd VecchiaFactor::unwhiten(const Eigen::VectorXd& w) const {
  Eigen::VectorXd v(n());
  for (int k = 0; k < n(); ++k) {
    double acc = std::sqrt(d[k]) * w[k];
    const auto& ak = a[k];
    for (int j = 0; j < ak.size(); ++j) acc += ak[j] * v[nbr[k][j]];
    v[order[k]] = acc;
  }
  return v;
}

double loglik(const VecchiaFactor& factor, const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
              const Eigen::VectorXd& beta) {
  if (y.size() != X.rows() || X.cols() != beta.size() || y.size() != factor.n())
    throw ValidationError("loglik: dimension mismatch");
  Eigen::VectorXd r = y - X * beta;
  double ll = 0.0;
  for (int k = 0; k < factor.n(); ++k) {
    double e = r[factor.order[k]];
    const auto& ak = factor.a[k];
    for (int j = 0; j < ak.size(); ++j) e -= ak[j] * r[factor.nbr[k][j]];
    ll += -0.5 * (kLog2Pi + std::log(factor.d[k])) - e * e / (2.0 * factor.d[k]);
  }
  return ll;
}

ProfileBeta profile_beta(const VecchiaFactor& factor, const Eigen::VectorXd& y,
                         const Eigen::MatrixXd& X) {
  const int n = factor.n();
  const int p = static_cast<int>(X.cols());
  Eigen::MatrixXd W(n, p);
  for (int c = 0; c < p; ++c) W.col(c) = factor.whiten(X.col(c));
  Eigen::VectorXd wy = factor.whiten(y);

  Eigen::MatrixXd xtx = W.transpose() * W;
  Eigen::LLT<Eigen::MatrixXd> llt(xtx);
  if (llt.info() != Eigen::Success)
    throw ValidationError("profile_beta: whitened design is rank deficient");

  ProfileBeta out;
  out.beta = llt.solve(W.transpose() * wy);
  out.beta_cov = llt.solve(Eigen::MatrixXd::Identity(p, p));
  Eigen::VectorXd resid = wy - W * out.beta;
  double quad = resid.squaredNorm();
  double logdet = factor.d.array().log().sum();
  out.loglik = -0.5 * (n * kLog2Pi + logdet + quad);
  return out;
}

namespace {

// Nelder-Mead simplex on R^dim, minimizing. Deterministic; convergence on the
// relative spread of the simplex function values.
template <typename F>
std::pair<Eigen::VectorXd, double> nelder_mead(F f, Eigen::VectorXd x0, double step, double tol,
                                               int max_iter, int& iters, int& evals,
                                               bool& converged) {
  const int dim = static_cast<int>(x0.size());
  std::vector<Eigen::VectorXd> xs(dim + 1, x0);
  std::vector<double> fs(dim + 1);
  evals = 0;
  for (int i = 1; i <= dim; ++i) xs[i][i - 1] += step;
  for (int i = 0; i <= dim; ++i) {
    fs[i] = f(xs[i]);
    ++evals;
  }

  converged = false;
  for (iters = 0; iters < max_iter; ++iters) {
    std::vector<int> rank(dim + 1);
    std::iota(rank.begin(), rank.end(), 0);
    std::sort(rank.begin(), rank.end(), [&](int a, int b) { return fs[a] < fs[b]; });
    int best = rank[0], worst = rank[dim], second = rank[dim - 1];
    if (std::abs(fs[worst] - fs[best]) <= tol * std::max(1.0, std::abs(fs[best]))) {
      converged = true;
      break;
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
    for (int i = 0; i <= dim; ++i)
      if (i != worst) centroid += xs[i];
    centroid /= dim;

    auto eval = [&](const Eigen::VectorXd& x) {
      ++evals;
      return f(x);
    };
    Eigen::VectorXd xr = centroid + (centroid - xs[worst]);
    double fr = eval(xr);
    if (fr < fs[best]) {
      Eigen::VectorXd xe = centroid + 2.0 * (centroid - xs[worst]);
      double fe = eval(xe);
      if (fe < fr) {
        xs[worst] = xe;
        fs[worst] = fe;
      } else {
        xs[worst] = xr;
        fs[worst] = fr;
      }
    } else if (fr < fs[second]) {
      xs[worst] = xr;
      fs[worst] = fr;
    } else {
      Eigen::VectorXd xc = centroid + 0.5 * (xs[worst] - centroid);
      double fc = eval(xc);
      if (fc < fs[worst]) {
        xs[worst] = xc;
        fs[worst] = fc;
      } else {
        for (int i = 0; i <= dim; ++i) {
          if (i == best) continue;
          xs[i] = xs[best] + 0.5 * (xs[i] - xs[best]);
          fs[i] = eval(xs[i]);
        }
      }
    }
  }
  int best = 0;
  for (int i = 1; i <= dim; ++i)
    if (fs[i] < fs[best]) best = i;
  return {xs[best], fs[best]};
}

CovarianceParams params_from_log(const Eigen::VectorXd& t) {
  CovarianceParams p;
  p.sigma2 = std::exp(t[0]);
  p.lambda = std::exp(t[1]);
  p.tau2 = std::exp(t[2]);
  return p;
}

}  // namespace

FitResult fit(const VecchiaContext& ctx, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
              std::optional<CovarianceParams> init, const OptimizerConfig& config) {
  if (ctx.n() < X.cols() + 1) throw ValidationError("fit: need n >= p + 1");
  auto t_start = std::chrono::steady_clock::now();

  CovarianceParams start;
  if (init) {
    start = *init;
  } else {
    // OLS residual variance split evenly between nugget and sill; range from the
    // median neighbor distance
    Eigen::VectorXd bols = (X.transpose() * X).ldlt().solve(X.transpose() * y);
    Eigen::VectorXd r = y - X * bols;
    double v = r.squaredNorm() / std::max<int>(1, static_cast<int>(y.size()) - 1);
    v = std::max(v, 1e-12);
    start.sigma2 = v / 2.0;
    start.tau2 = v / 2.0;
    start.lambda = std::max(ctx.median_neighbor_dist(), 1e-6);
  }

  auto objective = [&](const Eigen::VectorXd& t) {
    try {
      CovarianceParams p = params_from_log(t);
      VecchiaFactor f = ctx.factor(p);
      return -profile_beta(f, y, X).loglik;
    } catch (const std::exception&) {
      return 1e100;
    }
  };

  Eigen::VectorXd t0(3);
  t0 << std::log(start.sigma2), std::log(start.lambda), std::log(std::max(start.tau2, 1e-12));

  FitResult res;
  auto [tbest, fbest] =
      nelder_mead(objective, t0, config.init_step, config.tol, config.max_iter, res.iterations,
                  res.n_evals, res.converged);

  res.params = params_from_log(tbest);
  VecchiaFactor f = ctx.factor(res.params);
  ProfileBeta pb = profile_beta(f, y, X);
  res.params.beta = pb.beta;
  res.beta_cov = pb.beta_cov;
  res.loglik = pb.loglik;
  res.timings["estimation"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return res;
}

void bootstrap_ci(FitResult& result, const VecchiaContext& ctx, const Eigen::MatrixXd& X,
                  const Eigen::VectorXd& y, int B, std::uint64_t seed, BootstrapMode mode,
                  const OptimizerConfig& config) {
  if (B < 2) throw ValidationError("bootstrap: B must be >= 2");
  auto t_start = std::chrono::steady_clock::now();

  VecchiaFactor f = ctx.factor(result.params);
  Eigen::VectorXd fitted = X * result.params.beta;
  Eigen::VectorXd eps = f.whiten(y - fitted);  // decorrelated residuals
  Eigen::VectorXd centered = eps.array() - eps.mean();
  const int n = static_cast<int>(eps.size());

  std::vector<double> s2, lam, t2;
  int dropped = 0;
  for (int b = 0; b < B; ++b) {
    std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ull * (b + 1));
    Eigen::VectorXd estar(n);
    if (mode == BootstrapMode::Resample) {
      std::uniform_int_distribution<int> pick(0, n - 1);
      for (int i = 0; i < n; ++i) estar[i] = centered[pick(rng)];
    } else {
      std::normal_distribution<double> nd(0.0, 1.0);
      for (int i = 0; i < n; ++i) estar[i] = nd(rng);
    }
    Eigen::VectorXd ystar = fitted + f.unwhiten(estar);  // recorrelate
    try {
      FitResult rep = fit(ctx, X, ystar, result.params, config);
      if (!rep.converged) {
        ++dropped;
        continue;
      }
      s2.push_back(rep.params.sigma2);
      lam.push_back(rep.params.lambda);
      t2.push_back(rep.params.tau2);
    } catch (const std::exception&) {
      ++dropped;
    }
  }
  if (s2.size() < 2) throw ValidationError("bootstrap: fewer than 2 convergent replicates");

  auto quantile = [](std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    double pos = q * (v.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    std::size_t hi = std::min(lo + 1, v.size() - 1);
    double frac = pos - lo;
    return v[lo] * (1.0 - frac) + v[hi] * frac;
  };
  auto interval = [&](const std::vector<double>& v, double est) {
    FitResult::Interval ci{quantile(v, 0.025), quantile(v, 0.975)};
    // the reported interval always brackets the point estimate
    ci.lo = std::min(ci.lo, est);
    ci.hi = std::max(ci.hi, est);
    return ci;
  };
  result.ci_sigma2 = interval(s2, result.params.sigma2);
  result.ci_lambda = interval(lam, result.params.lambda);
  result.ci_tau2 = interval(t2, result.params.tau2);
  result.bootstrap_reps = static_cast<int>(s2.size());
  result.bootstrap_dropped = dropped;
  result.timings["inference"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
}

}  // namespace s3n
