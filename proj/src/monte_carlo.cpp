#include "wndyn/monte_carlo.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <stdexcept>
#include <utility>

#include "wndyn/averaged_semigroup.hpp"
#include "wndyn/rng.hpp"

namespace wndyn {

namespace {

constexpr int kBlockSize = 1024;
constexpr int kGroups = 16;

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& C) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("psd_sqrt: eigendecomposition failed");
  Eigen::VectorXd lam = es.eigenvalues();
  for (int i = 0; i < lam.size(); ++i) lam(i) = std::sqrt(std::max(0.0, lam(i)));
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

// Power sums over a set of trajectories: columns p, p^2, p^3, p^4, q, ..., q^4
// per time row, plus the per-trajectory energy-slope sums.
struct Sums {
  long n = 0;
  Eigen::ArrayXXd pw;
  double slope = 0.0, slope2 = 0.0;

  explicit Sums(int nt) : pw(Eigen::ArrayXXd::Zero(nt, 8)) {}

  void merge(const Sums& o) {
    n += o.n;
    pw += o.pw;
    slope += o.slope;
    slope2 += o.slope2;
  }
};

// Deterministic pairwise (binary-counter) reduction of per-block sums; the
// merge order depends only on the number of blocks pushed.
class PairwiseReducer {
 public:
  explicit PairwiseReducer(int nt) : nt_(nt) {}

  void push(Sums s) {
    int level = 0;
    while (!stack_.empty() && stack_.back().first == level) {
      Sums top = std::move(stack_.back().second);
      stack_.pop_back();
      top.merge(s);
      s = std::move(top);
      ++level;
    }
    stack_.emplace_back(level, std::move(s));
  }

  Sums total() const {
    Sums out(nt_);
    for (auto it = stack_.rbegin(); it != stack_.rend(); ++it)
      out.merge(it->second);
    return out;
  }

 private:
  int nt_;
  std::vector<std::pair<int, Sums>> stack_;
};

struct CentralMoments {
  double mean, m2, m3, m4;
};

CentralMoments central(const Eigen::ArrayXXd& pw, long n, int row, int col0) {
  const double inv = 1.0 / static_cast<double>(n);
  const double s1 = pw(row, col0) * inv;
  const double s2 = pw(row, col0 + 1) * inv;
  const double s3 = pw(row, col0 + 2) * inv;
  const double s4 = pw(row, col0 + 3) * inv;
  CentralMoments c;
  c.mean = s1;
  c.m2 = s2 - s1 * s1;
  c.m3 = s3 - 3.0 * s1 * s2 + 2.0 * s1 * s1 * s1;
  c.m4 = s4 - 4.0 * s1 * s3 + 6.0 * s1 * s1 * s2 - 3.0 * s1 * s1 * s1 * s1;
  return c;
}

// Shared accumulation and finalization for both samplers.  The trajectory
// generator is called once per trajectory index and must fill p, q (one value
// per time) and the energy-slope contribution.
template <typename TrajFn>
MomentEstimate run_trajectories(const SimulationConfig& config, int nt,
                                const TrajFn& traj) {
  PairwiseReducer reducer(nt);
  Sums block(nt);
  std::vector<Sums> groups(kGroups, Sums(nt));
  std::vector<double> p(nt), q(nt);

  for (long j = 0; j < config.n_traj; ++j) {
    double slope = 0.0;
    traj(j, &p, &q, &slope);
    Sums* targets[2] = {&block, &groups[static_cast<int>(j % kGroups)]};
    for (Sums* s : targets) {
      for (int k = 0; k < nt; ++k) {
        const double pk = p[k], qk = q[k];
        const double p2 = pk * pk, q2 = qk * qk;
        s->pw(k, 0) += pk;
        s->pw(k, 1) += p2;
        s->pw(k, 2) += p2 * pk;
        s->pw(k, 3) += p2 * p2;
        s->pw(k, 4) += qk;
        s->pw(k, 5) += q2;
        s->pw(k, 6) += q2 * qk;
        s->pw(k, 7) += q2 * q2;
      }
      s->n += 1;
      s->slope += slope;
      s->slope2 += slope * slope;
    }
    if (block.n == kBlockSize) {
      reducer.push(std::move(block));
      block = Sums(nt);
    }
  }
  if (block.n > 0) reducer.push(std::move(block));
  const Sums total = reducer.total();

  MomentEstimate out;
  out.times = config.times;
  out.n_traj = config.n_traj;
  out.seed = config.seed;
  const long n = total.n;

  for (int obs = 0; obs < 2; ++obs) {
    ObservableMoments& om = (obs == 0) ? out.p : out.q;
    const int col0 = 4 * obs;
    om.mean.resize(nt);
    om.mean_se.resize(nt);
    om.var.resize(nt);
    om.var_se.resize(nt);
    om.m3.resize(nt);
    om.m3_se.resize(nt);
    om.m4.resize(nt);
    om.m4_se.resize(nt);
    for (int k = 0; k < nt; ++k) {
      const CentralMoments c = central(total.pw, n, k, col0);
      om.mean[k] = c.mean;
      om.var[k] = c.m2;
      om.m3[k] = c.m3;
      om.m4[k] = c.m4;
      om.mean_se[k] = std::sqrt(std::max(0.0, c.m2) / static_cast<double>(n));
      om.var_se[k] =
          std::sqrt(std::max(0.0, c.m4 - c.m2 * c.m2) / static_cast<double>(n));
      // spread of the group estimates for the higher central moments
      double s3 = 0.0, s3sq = 0.0, s4 = 0.0, s4sq = 0.0;
      int geff = 0;
      for (const Sums& g : groups) {
        if (g.n < 2) continue;
        const CentralMoments cg = central(g.pw, g.n, k, col0);
        s3 += cg.m3;
        s3sq += cg.m3 * cg.m3;
        s4 += cg.m4;
        s4sq += cg.m4 * cg.m4;
        ++geff;
      }
      if (geff >= 2) {
        const double v3 =
            std::max(0.0, s3sq / geff - (s3 / geff) * (s3 / geff));
        const double v4 =
            std::max(0.0, s4sq / geff - (s4 / geff) * (s4 / geff));
        const double corr = static_cast<double>(geff) / (geff - 1);
        om.m3_se[k] = std::sqrt(v3 * corr / geff);
        om.m4_se[k] = std::sqrt(v4 * corr / geff);
      } else {
        om.m3_se[k] = std::numeric_limits<double>::quiet_NaN();
        om.m4_se[k] = std::numeric_limits<double>::quiet_NaN();
      }
    }
  }

  if (nt >= 2) {
    const double sm = total.slope / static_cast<double>(n);
    const double sv = total.slope2 / static_cast<double>(n) - sm * sm;
    out.slope_H = sm;
    out.slope_H_se = std::sqrt(std::max(0.0, sv) / static_cast<double>(n));
  } else {
    out.slope_H = std::numeric_limits<double>::quiet_NaN();
    out.slope_H_se = std::numeric_limits<double>::quiet_NaN();
  }

  // bookkeeping consistency: the group sums must reproduce the overall mean
  Sums regroup(nt);
  for (const Sums& g : groups) regroup.merge(g);
  double disc = 0.0;
  for (int k = 0; k < nt; ++k) {
    for (int c : {0, 4}) {
      const double a = total.pw(k, c) / static_cast<double>(total.n);
      const double b = regroup.pw(k, c) / static_cast<double>(regroup.n);
      disc = std::max(disc, std::abs(a - b) / (1.0 + std::abs(a)));
    }
  }
  out.batch_mean_discrepancy = disc;
  return out;
}

std::vector<double> slope_coefficients(const std::vector<double>& times) {
  const int nt = static_cast<int>(times.size());
  std::vector<double> c(nt, 0.0);
  if (nt < 2) return c;
  double tbar = 0.0;
  for (double t : times) tbar += t;
  tbar /= nt;
  double den = 0.0;
  for (double t : times) den += (t - tbar) * (t - tbar);
  for (int k = 0; k < nt; ++k) c[k] = (times[k] - tbar) / den;
  return c;
}

}  // namespace

void SimulationConfig::validate() const {
  if (n_traj < 2)
    throw std::invalid_argument("SimulationConfig: n_traj must be >= 2");
  if (times.empty())
    throw std::invalid_argument("SimulationConfig: need at least one time");
  double prev = -1.0;
  for (double t : times) {
    if (!(t >= 0.0) || !std::isfinite(t))
      throw std::invalid_argument("SimulationConfig: times must be finite and >= 0");
    if (!(t > prev))
      throw std::invalid_argument("SimulationConfig: times must be strictly increasing");
    prev = t;
  }
  const Eigen::Matrix2d& c = initial.cov;
  if (std::abs(c(0, 1) - c(1, 0)) > 1e-12 * (1.0 + c.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("SimulationConfig: initial covariance not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(c);
  if (es.eigenvalues()(0) < -1e-10 * (1.0 + std::abs(c.trace())))
    throw std::invalid_argument(
        "SimulationConfig: initial covariance not positive semidefinite");
}

MomentEstimate simulate_classical(const SimulationConfig& config) {
  config.validate();
  if (config.H.dim != 1)
    throw std::invalid_argument("simulate_classical: one canonical pair only");
  const int nt = static_cast<int>(config.times.size());
  const DiffusionMatrix D = diffusion_matrix(config.noise);

  struct StepOp {
    Eigen::Matrix2d J, S;
  };
  std::map<double, StepOp> cache;
  std::vector<const StepOp*> steps(nt);
  double prev = 0.0;
  for (int k = 0; k < nt; ++k) {
    const double dt = config.times[k] - prev;
    prev = config.times[k];
    auto it = cache.find(dt);
    if (it == cache.end()) {
      StepOp op;
      op.J = flow_jacobian(config.H, dt).J;
      op.S = psd_sqrt(
          smearing_covariance(config.H, D, dt, Direction::kState).C_t);
      it = cache.emplace(dt, op).first;
    }
    steps[k] = &it->second;
  }
  const Eigen::Matrix2d A0 = psd_sqrt(config.initial.cov);
  const std::vector<double> cs = slope_coefficients(config.times);

  auto traj = [&](long j, std::vector<double>* p, std::vector<double>* q,
                  double* slope) {
    CounterRng rng(config.seed, static_cast<std::uint64_t>(j));
    Eigen::Vector2d z =
        config.initial.mean + A0 * Eigen::Vector2d(rng.normal(), rng.normal());
    for (int k = 0; k < nt; ++k) {
      const Eigen::Vector2d xi =
          steps[k]->S * Eigen::Vector2d(rng.normal(), rng.normal());
      z = steps[k]->J * (z + xi);
      (*p)[k] = z(0);
      (*q)[k] = z(1);
      if (nt >= 2) *slope += cs[k] * config.H.energy(z);
    }
  };
  return run_trajectories(config, nt, traj);
}

MomentEstimate simulate_total_system(const SimulationConfig& config) {
  config.validate();
  if (!config.bath)
    throw std::invalid_argument("simulate_total_system: config has no bath");
  const BathSpec& bs = *config.bath;
  bs.validate();
  if (bs.n < 1)
    throw std::invalid_argument(
        "simulate_total_system: need n >= 1 bath oscillators");
  if (!(config.noise.is_q_only() ||
        config.noise.family == CovarianceFamily::kConstant))
    throw std::invalid_argument(
        "simulate_total_system: noise must be position-only");
  if (!(config.beta > 0.0) || !(config.hbar > 0.0))
    throw std::invalid_argument("simulate_total_system: beta, hbar must be > 0");
  const double curv = q_curvature(config.noise);
  const double m = bs.m;
  const int n = bs.n;
  const int N = n + 1;
  const int nt = static_cast<int>(config.times.size());

  const BathMatrices mats = build_bath(bs);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mats.Omega2);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("simulate_total_system: eigendecomposition failed");
  Eigen::VectorXd f(N);
  for (int k = 0; k < N; ++k) f(k) = std::sqrt(std::max(0.0, es.eigenvalues()(k)));
  const Eigen::MatrixXd U = es.eigenvectors();
  const Eigen::VectorXd U0 = U.row(0).transpose();
  const Eigen::VectorXd v = U0 / std::sqrt(m);

  // Exact per-step update in normal modes: y' = R_dt y + xi with
  // Cov xi = curv * int_0^dt (R_u e)(R_u e)^T du, e the system-momentum kick
  // direction; the mode-pair integrals have closed trigonometric forms.
  struct StepOp {
    Eigen::ArrayXd c, fs, sf;  // cos(f dt), f sin(f dt), sin(f dt)/f
    Eigen::MatrixXd S;         // square root of the step noise covariance
  };
  auto build_step = [&](double dt) {
    StepOp op;
    op.c.resize(N);
    op.fs.resize(N);
    op.sf.resize(N);
    for (int k = 0; k < N; ++k) {
      op.c(k) = std::cos(f(k) * dt);
      op.fs(k) = f(k) * std::sin(f(k) * dt);
      op.sf(k) = (f(k) == 0.0) ? dt : std::sin(f(k) * dt) / f(k);
    }
    if (curv == 0.0 || dt == 0.0) {
      op.S = Eigen::MatrixXd::Zero(2 * N, 2 * N);
      return op;
    }
    auto sinc_i = [dt](double x) {
      return std::abs(x) * dt < 1e-4 ? dt * (1.0 - x * x * dt * dt / 6.0)
                                     : std::sin(x * dt) / x;
    };
    auto cosm1_i = [dt](double x) {
      return std::abs(x) * dt < 1e-4 ? 0.5 * x * dt * dt
                                     : (1.0 - std::cos(x * dt)) / x;
    };
    Eigen::MatrixXd Sigma(2 * N, 2 * N);
    for (int k = 0; k < N; ++k) {
      for (int l = 0; l < N; ++l) {
        const double a = f(k), b = f(l);
        const double pp = 0.5 * (sinc_i(a - b) + sinc_i(a + b));
        double pq, qq;
        if ((a + b) * dt < 1e-3) {
          pq = 0.5 * dt * dt - (3.0 * a * a + b * b) * std::pow(dt, 4) / 24.0;
          qq = dt * dt * dt / 3.0 - (a * a + b * b) * std::pow(dt, 5) / 30.0;
        } else {
          if (b == 0.0) {
            pq = (std::cos(a * dt) - 1.0) / (a * a) +
                 dt * std::sin(a * dt) / a;
          } else {
            pq = 0.5 * (cosm1_i(a + b) - cosm1_i(a - b)) / b;
          }
          if (a == 0.0 || b == 0.0) {
            const double g = std::max(a, b);  // the nonzero one (or 0)
            qq = (g == 0.0)
                     ? dt * dt * dt / 3.0
                     : (std::sin(g * dt) / (g * g) - dt * std::cos(g * dt) / g) / g;
          } else {
            qq = 0.5 * (sinc_i(a - b) - sinc_i(a + b)) / (a * b);
          }
        }
        const double w = curv * v(k) * v(l);
        Sigma(k, l) = w * pp;
        Sigma(k, N + l) = w * pq;
        Sigma(N + l, k) = w * pq;
        Sigma(N + k, N + l) = w * qq;
      }
    }
    op.S = psd_sqrt(Sigma);
    return op;
  };

  std::map<double, StepOp> cache;
  std::vector<const StepOp*> steps(nt);
  double prevt = 0.0;
  for (int k = 0; k < nt; ++k) {
    const double dt = config.times[k] - prevt;
    prevt = config.times[k];
    auto it = cache.find(dt);
    if (it == cache.end()) it = cache.emplace(dt, build_step(dt)).first;
    steps[k] = &it->second;
  }

  const Eigen::Matrix2d A0 = psd_sqrt(config.initial.cov);
  const std::vector<double> cs = slope_coefficients(config.times);
  Eigen::VectorXd sig_p(n), sig_q(n);
  for (int j = 0; j < n; ++j) {
    const double be = beta_eff(config.hbar * bs.frequencies[j], config.beta);
    sig_p(j) = std::sqrt(bs.masses[j] / be);
    sig_q(j) = std::sqrt(1.0 / (bs.masses[j] * bs.frequencies[j] *
                                bs.frequencies[j] * be));
  }
  const double sqm = std::sqrt(m);
  const double w2m = bs.omega * bs.omega * m;

  auto traj = [&](long jt, std::vector<double>* pout, std::vector<double>* qout,
                  double* slope) {
    CounterRng rng(config.seed, static_cast<std::uint64_t>(jt));
    Eigen::VectorXd pi(N), x(N);
    const Eigen::Vector2d z0 =
        config.initial.mean + A0 * Eigen::Vector2d(rng.normal(), rng.normal());
    pi(0) = z0(0) / sqm;
    x(0) = z0(1) * sqm;
    for (int j = 0; j < n; ++j) {
      pi(j + 1) = sig_p(j) * rng.normal() / std::sqrt(bs.masses[j]);
      x(j + 1) = sig_q(j) * rng.normal() * std::sqrt(bs.masses[j]);
    }
    Eigen::VectorXd yp = U.transpose() * pi;
    Eigen::VectorXd yq = U.transpose() * x;
    Eigen::VectorXd g(2 * N), xi(2 * N), tp(N);
    for (int k = 0; k < nt; ++k) {
      const StepOp& op = *steps[k];
      tp = (op.c * yp.array() - op.fs * yq.array()).matrix();
      yq = (op.sf * yp.array() + op.c * yq.array()).matrix();
      yp = tp;
      for (int i = 0; i < 2 * N; ++i) g(i) = rng.normal();
      xi.noalias() = op.S * g;
      yp += xi.head(N);
      yq += xi.tail(N);
      const double p0 = sqm * U0.dot(yp);
      const double q0 = U0.dot(yq) / sqm;
      (*pout)[k] = p0;
      (*qout)[k] = q0;
      if (nt >= 2)
        *slope += cs[k] * (0.5 * p0 * p0 / m + 0.5 * w2m * q0 * q0);
    }
  };
  return run_trajectories(config, nt, traj);
}

}  // namespace wndyn
