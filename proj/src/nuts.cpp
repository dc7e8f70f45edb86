#include "hawkes/nuts.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>

#include "hawkes/rng.hpp"
#include "hawkes/stats.hpp"

namespace hawkes {
namespace {

constexpr double kMaxDeltaH = 1000.0;
const double kInf = std::numeric_limits<double>::infinity();

using Vec = std::vector<double>;

struct PhasePoint {
  Vec q, p, g;
  double logp{0.0};
};

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void add_to(Vec& acc, const Vec& v) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
}

Vec sum(const Vec& a, const Vec& b) {
  Vec out(a);
  add_to(out, b);
  return out;
}

class StepSizeAdapter {
 public:
  explicit StepSizeAdapter(double delta) : delta_(delta) {}

  void restart(double step) {
    mu_ = std::log(10.0 * step);
    counter_ = 0.0;
    s_bar_ = 0.0;
    x_bar_ = 0.0;
  }

  double learn(double accept) {
    counter_ += 1.0;
    accept = std::min(1.0, accept);
    const double eta = 1.0 / (counter_ + kT0);
    s_bar_ = (1.0 - eta) * s_bar_ + eta * (delta_ - accept);
    const double x = mu_ - s_bar_ * std::sqrt(counter_) / kGamma;
    const double x_eta = std::pow(counter_, -kKappa);
    x_bar_ = (1.0 - x_eta) * x_bar_ + x_eta * x;
    return std::exp(x);
  }

  [[nodiscard]] double final_step() const { return std::exp(x_bar_); }

 private:
  static constexpr double kGamma = 0.05;
  static constexpr double kT0 = 10.0;
  static constexpr double kKappa = 0.75;
  double delta_;
  double mu_{0.0};
  double counter_{0.0};
  double s_bar_{0.0};
  double x_bar_{0.0};
};

// Expanding windows for the diagonal metric: an initial fast buffer, slow
// windows of doubling length, and a terminal fast buffer.
class MetricWindows {
 public:
  MetricWindows(std::size_t warmup, std::size_t dim) : warmup_(warmup), mean_(dim), m2_(dim) {
    if (warmup < 20) {
      enabled_ = false;
      return;
    }
    if (init_ + term_ + base_ > warmup) {
      init_ = static_cast<std::size_t>(0.15 * static_cast<double>(warmup));
      term_ = static_cast<std::size_t>(0.1 * static_cast<double>(warmup));
      base_ = warmup - (init_ + term_);
    }
    window_size_ = base_;
    next_window_ = init_ + window_size_ - 1;
  }

  // Returns true when the metric was updated.
  bool learn(const Vec& q, Vec& inv_metric) {
    if (!enabled_) return false;
    if (in_window()) {
      ++n_;
      for (std::size_t i = 0; i < q.size(); ++i) {
        const double delta = q[i] - mean_[i];
        mean_[i] += delta / static_cast<double>(n_);
        m2_[i] += delta * (q[i] - mean_[i]);
      }
    }
    if (window_end()) {
      compute_next_window();
      const double n = static_cast<double>(n_);
      for (std::size_t i = 0; i < q.size(); ++i) {
        const double var = n > 1.0 ? m2_[i] / (n - 1.0) : 1.0;
        inv_metric[i] = (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0));
      }
      n_ = 0;
      std::fill(mean_.begin(), mean_.end(), 0.0);
      std::fill(m2_.begin(), m2_.end(), 0.0);
      ++counter_;
      return true;
    }
    ++counter_;
    return false;
  }

 private:
  [[nodiscard]] bool in_window() const {
    return counter_ >= init_ && counter_ < warmup_ - term_ && counter_ != warmup_;
  }
  [[nodiscard]] bool window_end() const { return counter_ == next_window_ && counter_ != warmup_; }

  void compute_next_window() {
    if (next_window_ == warmup_ - term_ - 1) return;
    window_size_ *= 2;
    next_window_ = counter_ + window_size_;
    if (next_window_ != warmup_ - term_ - 1) {
      const std::size_t boundary = next_window_ + 2 * window_size_;
      if (boundary >= warmup_ - term_) next_window_ = warmup_ - term_ - 1;
    }
  }

  bool enabled_{true};
  std::size_t warmup_;
  std::size_t init_{75};
  std::size_t term_{50};
  std::size_t base_{25};
  std::size_t window_size_{0};
  std::size_t next_window_{0};
  std::size_t counter_{0};
  std::size_t n_{0};
  Vec mean_, m2_;
};

struct Transition {
  int depth{0};
  int n_leapfrog{0};
  bool divergent{false};
  double accept_stat{0.0};
  double energy{0.0};
};

class Chain {
 public:
  Chain(const LogDensityTarget& target, std::size_t dim, int max_depth, Rng& rng)
      : target_(target), dim_(dim), max_depth_(max_depth), rng_(rng), inv_metric_(dim, 1.0) {}

  void initialise(double radius) {
    z_.q.assign(dim_, 0.0);
    z_.p.assign(dim_, 0.0);
    z_.g.assign(dim_, 0.0);
    for (int attempt = 0; attempt < 100; ++attempt) {
      for (auto& v : z_.q) v = radius * (2.0 * rng_.uniform() - 1.0);
      z_.logp = target_.log_density_gradient(z_.q, z_.g);
      if (std::isfinite(z_.logp) &&
          std::all_of(z_.g.begin(), z_.g.end(), [](double v) { return std::isfinite(v); })) {
        return;
      }
    }
    throw std::runtime_error("could not find a finite initial point after 100 attempts");
  }

  void init_step_size() {
    const PhasePoint start = z_;
    const double log_threshold = std::log(0.8);
    sample_momentum();
    double h0 = hamiltonian(z_);
    step(z_, step_);
    double h = hamiltonian(z_);
    if (std::isnan(h)) h = kInf;
    const int direction = h0 - h > log_threshold ? 1 : -1;
    while (true) {
      z_ = start;
      sample_momentum();
      h0 = hamiltonian(z_);
      step(z_, step_);
      h = hamiltonian(z_);
      if (std::isnan(h)) h = kInf;
      const double delta_h = h0 - h;
      if (direction == 1 && !(delta_h > log_threshold)) break;
      if (direction == -1 && !(delta_h < log_threshold)) break;
      step_ = direction == 1 ? 2.0 * step_ : 0.5 * step_;
      if (step_ > 1e7) throw std::runtime_error("step size diverged during initialisation");
      if (step_ == 0.0) throw std::runtime_error("step size collapsed to zero during initialisation");
    }
    z_ = start;
  }

  Transition transition() {
    sample_momentum();
    divergent_ = false;
    PhasePoint z_fwd = z_, z_bck = z_;
    PhasePoint z_sample = z_, z_propose = z_;

    Vec p_sharp = sharp(z_.p);
    Vec p_fwd_fwd = z_.p, p_sharp_fwd_fwd = p_sharp;
    Vec p_fwd_bck = z_.p, p_sharp_fwd_bck = p_sharp;
    Vec p_bck_fwd = z_.p, p_sharp_bck_fwd = p_sharp;
    Vec p_bck_bck = z_.p, p_sharp_bck_bck = p_sharp;
    Vec rho = z_.p;

    double log_sum_weight = 0.0;
    const double h0 = hamiltonian(z_);
    int n_leapfrog = 0;
    double sum_metro = 0.0;
    int depth = 0;

    while (depth < max_depth_) {
      Vec rho_fwd(dim_, 0.0), rho_bck(dim_, 0.0);
      bool valid = false;
      double lsw_subtree = -kInf;
      if (rng_.uniform() > 0.5) {
        rho_bck = rho;
        p_bck_fwd = p_fwd_bck;
        p_sharp_bck_fwd = p_sharp_fwd_bck;
        valid = build_tree(depth, z_fwd, z_propose, p_sharp_fwd_bck, p_sharp_fwd_fwd, rho_fwd,
                           p_fwd_bck, p_fwd_fwd, h0, 1.0, n_leapfrog, lsw_subtree, sum_metro);
      } else {
        rho_fwd = rho;
        p_fwd_bck = p_bck_fwd;
        p_sharp_fwd_bck = p_sharp_bck_fwd;
        valid = build_tree(depth, z_bck, z_propose, p_sharp_bck_fwd, p_sharp_bck_bck, rho_bck,
                           p_bck_fwd, p_bck_bck, h0, -1.0, n_leapfrog, lsw_subtree, sum_metro);
      }
      if (!valid) break;
      ++depth;

      if (lsw_subtree > log_sum_weight) {
        z_sample = z_propose;
      } else if (rng_.uniform() < std::exp(lsw_subtree - log_sum_weight)) {
        z_sample = z_propose;
      }
      log_sum_weight = stats::log_sum_exp(log_sum_weight, lsw_subtree);

      rho = sum(rho_bck, rho_fwd);
      bool persist = criterion(p_sharp_bck_bck, p_sharp_fwd_fwd, rho);
      persist = persist && criterion(p_sharp_bck_bck, p_sharp_fwd_bck, sum(rho_bck, p_fwd_bck));
      persist = persist && criterion(p_sharp_bck_fwd, p_sharp_fwd_fwd, sum(rho_fwd, p_bck_fwd));
      if (!persist) break;
    }

    z_ = z_sample;
    Transition t;
    t.depth = depth;
    t.n_leapfrog = n_leapfrog;
    t.divergent = divergent_;
    t.accept_stat = n_leapfrog > 0 ? sum_metro / n_leapfrog : 0.0;
    t.energy = hamiltonian(z_);
    return t;
  }

  PhasePoint& state() { return z_; }
  Vec& inv_metric() { return inv_metric_; }
  double& step_size() { return step_; }

 private:
  bool build_tree(int depth, PhasePoint& z, PhasePoint& z_propose, Vec& p_sharp_beg,
                  Vec& p_sharp_end, Vec& rho, Vec& p_beg, Vec& p_end, double h0, double sign,
                  int& n_leapfrog, double& log_sum_weight, double& sum_metro) {
    if (depth == 0) {
      step(z, sign * step_);
      ++n_leapfrog;
      double h = hamiltonian(z);
      if (std::isnan(h)) h = kInf;
      if (h - h0 > kMaxDeltaH) divergent_ = true;
      log_sum_weight = stats::log_sum_exp(log_sum_weight, h0 - h);
      sum_metro += h0 - h > 0.0 ? 1.0 : std::exp(h0 - h);
      z_propose = z;
      p_sharp_beg = sharp(z.p);
      p_sharp_end = p_sharp_beg;
      add_to(rho, z.p);
      p_beg = z.p;
      p_end = p_beg;
      return !divergent_;
    }

    Vec p_sharp_init_end(dim_), p_init_end(dim_), rho_init(dim_, 0.0);
    double lsw_init = -kInf;
    if (!build_tree(depth - 1, z, z_propose, p_sharp_beg, p_sharp_init_end, rho_init, p_beg,
                    p_init_end, h0, sign, n_leapfrog, lsw_init, sum_metro)) {
      return false;
    }

    PhasePoint z_propose_final = z;
    Vec rho_final(dim_, 0.0), p_final_beg(dim_), p_sharp_final_beg(dim_);
    double lsw_final = -kInf;
    if (!build_tree(depth - 1, z, z_propose_final, p_sharp_final_beg, p_sharp_end, rho_final,
                    p_final_beg, p_end, h0, sign, n_leapfrog, lsw_final, sum_metro)) {
      return false;
    }

    const double lsw_subtree = stats::log_sum_exp(lsw_init, lsw_final);
    log_sum_weight = stats::log_sum_exp(log_sum_weight, lsw_subtree);
    if (lsw_final > lsw_subtree) {
      z_propose = z_propose_final;
    } else if (rng_.uniform() < std::exp(lsw_final - lsw_subtree)) {
      z_propose = z_propose_final;
    }

    const Vec rho_subtree = sum(rho_init, rho_final);
    add_to(rho, rho_subtree);
    bool persist = criterion(p_sharp_beg, p_sharp_end, rho_subtree);
    persist = persist && criterion(p_sharp_beg, p_sharp_final_beg, sum(rho_init, p_final_beg));
    persist = persist && criterion(p_sharp_init_end, p_sharp_end, sum(rho_final, p_init_end));
    return persist;
  }

  static bool criterion(const Vec& p_sharp_minus, const Vec& p_sharp_plus, const Vec& rho) {
    return dot(p_sharp_plus, rho) > 0.0 && dot(p_sharp_minus, rho) > 0.0;
  }

  void sample_momentum() {
    for (std::size_t i = 0; i < dim_; ++i) z_.p[i] = rng_.normal() / std::sqrt(inv_metric_[i]);
  }

  [[nodiscard]] Vec sharp(const Vec& p) const {
    Vec out(dim_);
    for (std::size_t i = 0; i < dim_; ++i) out[i] = inv_metric_[i] * p[i];
    return out;
  }

  [[nodiscard]] double hamiltonian(const PhasePoint& z) const {
    double kinetic = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) kinetic += inv_metric_[i] * z.p[i] * z.p[i];
    return -z.logp + 0.5 * kinetic;
  }

  void step(PhasePoint& z, double eps) {
    z.logp = leapfrog(target_, z.q, z.p, z.g, inv_metric_, eps);
  }

  const LogDensityTarget& target_;
  std::size_t dim_;
  int max_depth_;
  Rng& rng_;
  Vec inv_metric_;
  double step_{1.0};
  bool divergent_{false};
  PhasePoint z_;
};

}  // namespace

void SamplerConfig::validate() const {
  if (chains < 1) throw std::invalid_argument("chains must be at least 1");
  if (draws < 1) throw std::invalid_argument("draws must be at least 1");
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw std::invalid_argument("target acceptance must lie in (0, 1)");
  }
  if (max_depth < 1 || max_depth > 30) throw std::invalid_argument("max tree depth must be in [1, 30]");
  if (!(max_divergent_fraction >= 0.0 && max_divergent_fraction <= 1.0)) {
    throw std::invalid_argument("max divergent fraction must lie in [0, 1]");
  }
  if (!(init_radius > 0.0)) throw std::invalid_argument("init radius must be positive");
}

double leapfrog(const LogDensityTarget& target, std::span<double> q, std::span<double> p,
                std::span<double> gradient, std::span<const double> inv_metric, double step) {
  const std::size_t n = q.size();
  for (std::size_t i = 0; i < n; ++i) p[i] += 0.5 * step * gradient[i];
  for (std::size_t i = 0; i < n; ++i) q[i] += step * inv_metric[i] * p[i];
  const double logp = target.log_density_gradient(q, gradient);
  for (std::size_t i = 0; i < n; ++i) p[i] += 0.5 * step * gradient[i];
  return std::isnan(logp) ? -kInf : logp;
}

std::size_t NutsOutput::divergent_count() const {
  return static_cast<std::size_t>(std::count(divergent.begin(), divergent.end(), 1));
}

NutsOutput run_nuts(const LogDensityTarget& target, const SamplerConfig& cfg) {
  cfg.validate();
  const std::size_t dim = target.dimension();
  if (dim == 0) throw std::invalid_argument("target has no parameters");

  NutsOutput out;
  out.chains = cfg.chains;
  out.draws = cfg.draws;
  out.dim = dim;
  const std::size_t total = cfg.chains * cfg.draws;
  out.positions.resize(total * dim);
  out.log_density.resize(total);
  out.divergent.resize(total);
  out.tree_depth.resize(total);
  out.n_leapfrog.resize(total);
  out.energy.resize(total);
  out.accept_stat.resize(total);
  out.step_size.resize(cfg.chains);
  out.inv_metric.resize(cfg.chains * dim);
  std::vector<std::size_t> warmup_divergent(cfg.chains, 0);

  const std::uint64_t base = stream_id("nuts/chain");
  std::exception_ptr failure;
  const auto n_chains = static_cast<std::ptrdiff_t>(cfg.chains);
#pragma omp parallel for schedule(static, 1)
  for (std::ptrdiff_t ci = 0; ci < n_chains; ++ci) {
    const auto c = static_cast<std::size_t>(ci);
    try {
      Rng rng(cfg.seed, stream_id(base, c));
      Chain chain(target, dim, cfg.max_depth, rng);
      chain.initialise(cfg.init_radius);
      chain.init_step_size();
      StepSizeAdapter adapter(cfg.target_accept);
      adapter.restart(chain.step_size());
      MetricWindows windows(cfg.warmup, dim);

      for (std::size_t it = 0; it < cfg.warmup; ++it) {
        const Transition t = chain.transition();
        if (t.divergent) ++warmup_divergent[c];
        chain.step_size() = adapter.learn(t.accept_stat);
        if (windows.learn(chain.state().q, chain.inv_metric())) {
          chain.init_step_size();
          adapter.restart(chain.step_size());
        }
      }
      if (cfg.warmup > 0) chain.step_size() = adapter.final_step();

      for (std::size_t d = 0; d < cfg.draws; ++d) {
        const Transition t = chain.transition();
        const std::size_t slot = c * cfg.draws + d;
        std::copy(chain.state().q.begin(), chain.state().q.end(), out.positions.begin() + slot * dim);
        out.log_density[slot] = chain.state().logp;
        out.divergent[slot] = t.divergent ? 1 : 0;
        out.tree_depth[slot] = t.depth;
        out.n_leapfrog[slot] = t.n_leapfrog;
        out.energy[slot] = t.energy;
        out.accept_stat[slot] = t.accept_stat;
      }
      out.step_size[c] = chain.step_size();
      std::copy(chain.inv_metric().begin(), chain.inv_metric().end(), out.inv_metric.begin() + c * dim);
    } catch (...) {
#pragma omp critical(run_nuts_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  out.warmup_divergent = std::accumulate(warmup_divergent.begin(), warmup_divergent.end(), std::size_t{0});
  return out;
}

std::size_t PosteriorDraws::index_of(std::string_view name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::out_of_range("no parameter named '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - names.begin());
}

std::vector<double> PosteriorDraws::column(std::size_t k) const {
  std::vector<double> out(total());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = values[i * dim() + k];
  return out;
}

std::vector<std::vector<double>> PosteriorDraws::by_chain(std::size_t k) const {
  std::vector<std::vector<double>> out(chains, std::vector<double>(draws));
  for (std::size_t c = 0; c < chains; ++c) {
    for (std::size_t d = 0; d < draws; ++d) out[c][d] = values[(c * draws + d) * dim() + k];
  }
  return out;
}

std::size_t PosteriorDraws::divergent_count() const {
  return static_cast<std::size_t>(std::count(divergent.begin(), divergent.end(), 1));
}

double PosteriorDraws::max_loglik_mismatch() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < total(); ++i) {
    const auto row = session_row(i);
    double s = 0.0;
    for (double v : row) s += v;
    worst = std::max(worst, std::abs(s - log_likelihood[i]));
  }
  return worst;
}

PosteriorDraws to_posterior(const ModelSpec& spec, const NutsOutput& raw) {
  if (raw.dim != spec.dimension()) throw std::invalid_argument("raw draws do not match the model");
  PosteriorDraws out;
  out.model = spec.label();
  out.chains = raw.chains;
  out.draws = raw.draws;
  out.names = spec.param_names();
  out.sessions = spec.session_count();
  const std::size_t total = raw.chains * raw.draws;
  const std::size_t dim = raw.dim;
  out.values.resize(total * dim);
  out.log_prior.resize(total);
  out.log_prior_branching.resize(total);
  out.log_likelihood.resize(total);
  out.session_loglik.resize(total * out.sessions);
  out.divergent = raw.divergent;
  out.tree_depth = raw.tree_depth;
  out.energy = raw.energy;
  out.accept_stat = raw.accept_stat;
  out.step_size = raw.step_size;

  const auto n_total = static_cast<std::ptrdiff_t>(total);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < n_total; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const auto u = raw.position(i / raw.draws, i % raw.draws);
    const std::vector<double> x = spec.constrain(u);
    std::copy(x.begin(), x.end(), out.values.begin() + i * dim);
    const DensityValue v = spec.log_density(u, false);
    out.log_prior[i] = v.log_prior;
    out.log_prior_branching[i] = v.log_prior_branching;
    out.log_likelihood[i] = v.log_likelihood;
    std::copy(v.session_loglik.begin(), v.session_loglik.end(),
              out.session_loglik.begin() + i * out.sessions);
  }
  return out;
}

PosteriorDraws sample(const ModelSpec& spec, const SamplerConfig& cfg) {
  const NutsOutput raw = run_nuts(spec, cfg);
  const std::size_t divergent = raw.divergent_count();
  const std::size_t total = raw.chains * raw.draws;
  if (static_cast<double>(divergent) > cfg.max_divergent_fraction * static_cast<double>(total)) {
    throw DivergenceError(std::to_string(divergent) + " of " + std::to_string(total) +
                              " transitions diverged; reparameterize the model or raise the "
                              "target acceptance",
                          divergent, total);
  }
  return to_posterior(spec, raw);
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("welch_t_test: empty sample");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double va = a.size() > 1 ? stats::variance(a) : 0.0;
  const double vb = b.size() > 1 ? stats::variance(b) : 0.0;
  const double diff = stats::mean(a) - stats::mean(b);
  if (va == 0.0 && vb == 0.0) {
    if (diff == 0.0) return {0.0, na + nb - 2.0, 1.0};
    throw std::invalid_argument("welch_t_test: both samples have zero variance");
  }
  const double sa = va / na;
  const double sb = vb / nb;
  WelchResult r;
  r.t = diff / std::sqrt(sa + sb);
  const double denom = (na > 1.0 ? sa * sa / (na - 1.0) : 0.0) + (nb > 1.0 ? sb * sb / (nb - 1.0) : 0.0);
  r.df = (sa + sb) * (sa + sb) / denom;
  r.p_value = stats::student_t_two_sided(r.t, r.df);
  return r;
}

}  // namespace hawkes
