#include "hawkes/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "hawkes/kernels.hpp"
#include "hawkes/nuts.hpp"

namespace hawkes {
namespace {

struct LogPdf {
  double value;
  double dx;  // derivative with respect to the constrained value
};

const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

LogPdf half_normal(double x, double s) {
  return {std::log(2.0) - std::log(s) - kLogSqrt2Pi - 0.5 * x * x / (s * s), -x / (s * s)};
}

LogPdf half_cauchy(double x, double s) {
  const double r = x / s;
  return {std::log(2.0 / (std::numbers::pi * s)) - std::log1p(r * r), -2.0 * x / (s * s + x * x)};
}

LogPdf gamma_pdf(double x, double shape, double scale) {
  return {(shape - 1.0) * std::log(x) - x / scale - std::lgamma(shape) - shape * std::log(scale),
          (shape - 1.0) / x - 1.0 / scale};
}

double sigmoid(double u) {
  return u >= 0.0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
}

// log(sigmoid(u)) + log(1 - sigmoid(u))
double log_sigmoid_pair(double u) {
  return -std::abs(u) - 2.0 * std::log1p(std::exp(-std::abs(u)));
}

std::string delta_name(const Session& s) { return "delta_mu[" + s.person_id + ":" + s.session_id + "]"; }

}  // namespace

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::pooled: return "pooled";
    case ModelKind::unpooled: return "unpooled";
    case ModelKind::partial: return "partial";
  }
  return "unknown";
}

std::string_view to_string(ProcessKind kind) noexcept {
  return kind == ProcessKind::hawkes ? "hawkes" : "poisson";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "pooled") return ModelKind::pooled;
  if (name == "unpooled") return ModelKind::unpooled;
  if (name == "partial" || name == "partial-pooled" || name == "partial_pooled") return ModelKind::partial;
  throw std::invalid_argument("unknown model kind '" + std::string(name) + "'");
}

void PriorConfig::validate() const {
  const double v[] = {mu_mu_scale,       mu_alpha_shape,    mu_alpha_scale,      mu_beta_scale,
                      sigma_mu_scale,    sigma_alpha_scale, sigma_beta_scale,    unpooled_mu_scale,
                      unpooled_beta_scale, pooled_upper,    delta_mu_scale};
  for (double x : v) {
    if (!(x > 0.0) || !std::isfinite(x)) throw std::invalid_argument("prior scales must be positive");
  }
}

std::string ModelSpec::label() const {
  std::string s(to_string(kind_));
  if (process_ == ProcessKind::poisson) s += "-poisson";
  return s;
}

ModelSpec build_model(ModelKind kind, const Cohort& cohort, const PriorConfig& priors,
                      ProcessKind process) {
  priors.validate();
  if (cohort.session_count() == 0) throw std::invalid_argument("cohort has no sessions");
  validate(cohort);

  ModelSpec spec;
  spec.kind_ = kind;
  spec.process_ = process;
  spec.priors_ = priors;
  const bool hawkes = process == ProcessKind::hawkes;

  for (std::size_t n = 0; n < cohort.persons.size(); ++n) {
    const Person& person = cohort.persons[n];
    spec.person_ids_.push_back(person.id);
    for (const Session& s : person.sessions) {
      spec.session_person_.push_back(n);
      if (hawkes && !s.empty()) {
        spec.session_delta_.push_back(spec.n_delta_++);
      } else {
        spec.session_delta_.push_back(ModelSpec::npos);
      }
      spec.sessions_.push_back(s);
    }
  }
  const std::size_t n_persons = spec.person_ids_.size();
  auto& names = spec.names_;
  auto person_block = [&](const std::string& symbol) {
    const std::size_t start = names.size();
    for (const auto& id : spec.person_ids_) names.push_back(symbol + "[" + id + "]");
    return start;
  };

  switch (kind) {
    case ModelKind::pooled:
      spec.mu_ = names.size();
      names.emplace_back("mu");
      if (hawkes) {
        spec.alpha_ = names.size();
        names.emplace_back("alpha");
        spec.beta_ = names.size();
        names.emplace_back("beta");
      }
      break;
    case ModelKind::unpooled:
      spec.mu_ = person_block("mu");
      if (hawkes) {
        spec.alpha_ = person_block("alpha");
        spec.beta_ = person_block("beta");
      }
      break;
    case ModelKind::partial:
      spec.hyper_ = names.size();
      if (hawkes) {
        for (const char* h : {"mu_mu", "mu_alpha", "mu_beta", "sigma_mu", "sigma_alpha", "sigma_beta"}) {
          names.emplace_back(h);
        }
      } else {
        names.emplace_back("mu_mu");
        names.emplace_back("sigma_mu");
      }
      spec.mu_ = person_block("mu");
      if (hawkes) {
        spec.alpha_ = person_block("alpha");
        spec.beta_ = person_block("beta");
      }
      break;
  }
  if (spec.n_delta_ > 0) {
    spec.delta_ = names.size();
    for (std::size_t i = 0; i < spec.sessions_.size(); ++i) {
      if (spec.session_delta_[i] != ModelSpec::npos) names.push_back(delta_name(spec.sessions_[i]));
    }
  }
  (void)n_persons;
  return spec;
}

std::size_t ModelSpec::index_of(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw std::out_of_range("no parameter named '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - names_.begin());
}

std::size_t ModelSpec::branching_index() const noexcept {
  if (process_ != ProcessKind::hawkes) return npos;
  if (kind_ == ModelKind::pooled) return alpha_;
  if (kind_ == ModelKind::partial) return hyper_ + 1;
  return npos;
}

std::vector<std::size_t> ModelSpec::person_alpha_indices() const {
  std::vector<std::size_t> out;
  if (process_ != ProcessKind::hawkes || kind_ == ModelKind::pooled) return out;
  for (std::size_t n = 0; n < person_count(); ++n) out.push_back(alpha_ + n);
  return out;
}

std::size_t ModelSpec::person_block(std::string_view which) const {
  if (which == "mu") return mu_;
  if (which == "alpha") return alpha_;
  if (which == "beta") return beta_;
  throw std::invalid_argument("unknown person block");
}

std::vector<std::size_t> ModelSpec::prior_scaled_indices() const {
  std::vector<std::size_t> out;
  if (kind_ == ModelKind::partial) {
    const std::size_t n_hyper = process_ == ProcessKind::hawkes ? 6 : 2;
    for (std::size_t k = 0; k < n_hyper; ++k) out.push_back(hyper_ + k);
    return out;
  }
  const std::size_t end = delta_ == npos ? names_.size() : delta_;
  for (std::size_t k = 0; k < end; ++k) out.push_back(k);
  return out;
}

DensityValue ModelSpec::log_density(std::span<const double> u, bool with_gradient) const {
  if (u.size() != dimension()) throw std::invalid_argument("log_density: wrong parameter count");
  const bool hawkes = process_ == ProcessKind::hawkes;
  const std::size_t n_persons = person_count();
  const PriorConfig& pr = priors_;
  const double w_prior = power.prior;
  const double w_lik = power.likelihood;

  DensityValue out;
  if (with_gradient) out.gradient.assign(u.size(), 0.0);
  auto add_grad = [&](std::size_t i, double v) {
    if (with_gradient) out.gradient[i] += v;
  };

  std::vector<double> pm(n_persons), pa(n_persons, 0.0), pb(n_persons, 1.0);

  // Parameter transforms, priors and Jacobians.
  if (kind_ == ModelKind::pooled) {
    const double upper = pr.pooled_upper;
    const std::size_t idx[] = {mu_, alpha_, beta_};
    double vals[3] = {0.0, 0.0, 1.0};
    for (int k = 0; k < (hawkes ? 3 : 1); ++k) {
      const double uk = u[idx[k]];
      vals[k] = upper * sigmoid(uk);
      out.log_prior += -std::log(upper);
      out.log_jacobian += std::log(upper) + log_sigmoid_pair(uk);
      add_grad(idx[k], 1.0 - 2.0 * sigmoid(uk));
    }
    if (hawkes) out.log_prior_branching = -std::log(upper);
    std::fill(pm.begin(), pm.end(), vals[0]);
    if (hawkes) {
      std::fill(pa.begin(), pa.end(), vals[1]);
      std::fill(pb.begin(), pb.end(), vals[2]);
    }
  } else if (kind_ == ModelKind::unpooled) {
    for (std::size_t n = 0; n < n_persons; ++n) {
      pm[n] = std::exp(u[mu_ + n]);
      const LogPdf lp = half_cauchy(pm[n], pr.unpooled_mu_scale);
      out.log_prior += lp.value;
      out.log_jacobian += u[mu_ + n];
      add_grad(mu_ + n, w_prior * lp.dx * pm[n] + 1.0);
      if (hawkes) {
        pa[n] = std::exp(u[alpha_ + n]);
        pb[n] = std::exp(u[beta_ + n]);
        const LogPdf la = gamma_pdf(pa[n], pr.mu_alpha_shape, pr.mu_alpha_scale);
        const LogPdf lb = half_cauchy(pb[n], pr.unpooled_beta_scale);
        out.log_prior += la.value + lb.value;
        out.log_prior_branching += la.value;
        out.log_jacobian += u[alpha_ + n] + u[beta_ + n];
        add_grad(alpha_ + n, w_prior * la.dx * pa[n] + 1.0);
        add_grad(beta_ + n, w_prior * lb.dx * pb[n] + 1.0);
      }
    }
  } else {
    // Hyperpriors on log scale.
    const std::size_t n_hyper = hawkes ? 6 : 2;
    double h[6];
    for (std::size_t k = 0; k < n_hyper; ++k) {
      h[k] = std::exp(u[hyper_ + k]);
      out.log_jacobian += u[hyper_ + k];
    }
    auto hyper_prior = [&](std::size_t k, const LogPdf& lp) {
      out.log_prior += lp.value;
      add_grad(hyper_ + k, w_prior * lp.dx * h[k] + 1.0);
    };
    if (hawkes) {
      hyper_prior(0, half_normal(h[0], pr.mu_mu_scale));
      const LogPdf la = gamma_pdf(h[1], pr.mu_alpha_shape, pr.mu_alpha_scale);
      hyper_prior(1, la);
      out.log_prior_branching = la.value;
      hyper_prior(2, half_cauchy(h[2], pr.mu_beta_scale));
      hyper_prior(3, half_cauchy(h[3], pr.sigma_mu_scale));
      hyper_prior(4, half_cauchy(h[4], pr.sigma_alpha_scale));
      hyper_prior(5, half_cauchy(h[5], pr.sigma_beta_scale));
    } else {
      hyper_prior(0, half_normal(h[0], pr.mu_mu_scale));
      hyper_prior(1, half_cauchy(h[1], pr.sigma_mu_scale));
    }
    // Non-centered person parameters: theta = exp(log(m) - s^2/2 + s z).
    const std::size_t blocks = hawkes ? 3 : 1;
    const std::size_t block_start[] = {mu_, alpha_, beta_};
    std::vector<double>* targets[] = {&pm, &pa, &pb};
    for (std::size_t b = 0; b < blocks; ++b) {
      const double m = h[b];
      const double s = h[b + blocks];
      const double loc = std::log(m) - 0.5 * s * s;
      for (std::size_t n = 0; n < n_persons; ++n) {
        const double z = u[block_start[b] + n];
        (*targets[b])[n] = std::exp(loc + s * z);
        out.log_prior_fixed += -0.5 * z * z - kLogSqrt2Pi;
        add_grad(block_start[b] + n, -z);
      }
    }
  }

  std::vector<double> delta(n_delta_);
  for (std::size_t e = 0; e < n_delta_; ++e) {
    delta[e] = std::exp(u[delta_ + e]);
    const LogPdf ld = half_cauchy(delta[e], pr.delta_mu_scale);
    out.log_prior_fixed += ld.value;
    out.log_jacobian += u[delta_ + e];
    add_grad(delta_ + e, ld.dx * delta[e] + 1.0);
  }

  // Likelihood.
  const std::size_t n_sessions = sessions_.size();
  std::vector<HawkesParams> params(n_sessions);
  for (std::size_t i = 0; i < n_sessions; ++i) {
    const std::size_t n = session_person_[i];
    const double d = session_delta_[i] == npos ? 0.0 : delta[session_delta_[i]];
    params[i] = {pm[n], pa[n], pb[n], pm[n] + d};
  }
  out.session_loglik.assign(n_sessions, 0.0);
  std::vector<LikelihoodGradient> lg(with_gradient ? n_sessions : 0);
  kernels::batch_log_likelihood(sessions_, params, out.session_loglik, lg);
  out.log_likelihood = kernels::ordered_sum(out.session_loglik);

  if (with_gradient) {
    std::vector<double> gm(n_persons, 0.0), ga(n_persons, 0.0), gb(n_persons, 0.0);
    for (std::size_t i = 0; i < n_sessions; ++i) {
      const std::size_t n = session_person_[i];
      gm[n] += lg[i].mu;
      ga[n] += lg[i].alpha;
      gb[n] += lg[i].beta;
      if (session_delta_[i] != npos) {
        const std::size_t e = session_delta_[i];
        add_grad(delta_ + e, w_lik * lg[i].delta_mu * delta[e]);
      }
    }
    if (kind_ == ModelKind::pooled) {
      const double upper = pr.pooled_upper;
      const std::size_t idx[] = {mu_, alpha_, beta_};
      const std::vector<double>* g[] = {&gm, &ga, &gb};
      const double vals[] = {pm[0], pa[0], pb[0]};
      for (int k = 0; k < (hawkes ? 3 : 1); ++k) {
        double total = 0.0;
        for (double v : *g[k]) total += v;
        add_grad(idx[k], w_lik * total * vals[k] * (1.0 - vals[k] / upper));
      }
    } else if (kind_ == ModelKind::unpooled) {
      for (std::size_t n = 0; n < n_persons; ++n) {
        add_grad(mu_ + n, w_lik * gm[n] * pm[n]);
        if (hawkes) {
          add_grad(alpha_ + n, w_lik * ga[n] * pa[n]);
          add_grad(beta_ + n, w_lik * gb[n] * pb[n]);
        }
      }
    } else {
      const std::size_t blocks = hawkes ? 3 : 1;
      const std::size_t block_start[] = {mu_, alpha_, beta_};
      const std::vector<double>* g[] = {&gm, &ga, &gb};
      const std::vector<double>* vals[] = {&pm, &pa, &pb};
      for (std::size_t b = 0; b < blocks; ++b) {
        const double s = std::exp(u[hyper_ + b + blocks]);
        for (std::size_t n = 0; n < n_persons; ++n) {
          const double z = u[block_start[b] + n];
          const double dtheta = w_lik * (*g[b])[n] * (*vals[b])[n];  // d/d log(theta)
          add_grad(block_start[b] + n, dtheta * s);
          add_grad(hyper_ + b, dtheta);
          add_grad(hyper_ + b + blocks, dtheta * (z - s) * s);
        }
      }
    }
  }

  out.total = w_prior * out.log_prior + out.log_prior_fixed + w_lik * out.log_likelihood +
              out.log_jacobian;
  out.finite = std::isfinite(out.total);
  if (with_gradient && out.finite) {
    for (double g : out.gradient) {
      if (!std::isfinite(g)) {
        out.finite = false;
        break;
      }
    }
  }
  return out;
}

double ModelSpec::log_density_gradient(std::span<const double> q, std::span<double> gradient) const {
  DensityValue v = log_density(q, true);
  std::copy(v.gradient.begin(), v.gradient.end(), gradient.begin());
  return v.finite ? v.total : std::numeric_limits<double>::quiet_NaN();
}

std::vector<double> ModelSpec::constrain(std::span<const double> u) const {
  if (u.size() != dimension()) throw std::invalid_argument("constrain: wrong parameter count");
  std::vector<double> x(u.size());
  const bool hawkes = process_ == ProcessKind::hawkes;
  const std::size_t n_persons = person_count();
  if (kind_ == ModelKind::pooled) {
    for (std::size_t k = 0; k < (hawkes ? 3u : 1u); ++k) x[k] = priors_.pooled_upper * sigmoid(u[k]);
  } else if (kind_ == ModelKind::unpooled) {
    for (std::size_t k = 0; k < (hawkes ? 3 : 1) * n_persons; ++k) x[k] = std::exp(u[k]);
  } else {
    const std::size_t blocks = hawkes ? 3 : 1;
    for (std::size_t k = 0; k < 2 * blocks; ++k) x[hyper_ + k] = std::exp(u[hyper_ + k]);
    const std::size_t block_start[] = {mu_, alpha_, beta_};
    for (std::size_t b = 0; b < blocks; ++b) {
      const double m = x[hyper_ + b];
      const double s = x[hyper_ + b + blocks];
      const double loc = std::log(m) - 0.5 * s * s;
      for (std::size_t n = 0; n < n_persons; ++n) {
        x[block_start[b] + n] = std::exp(loc + s * u[block_start[b] + n]);
      }
    }
  }
  for (std::size_t e = 0; e < n_delta_; ++e) x[delta_ + e] = std::exp(u[delta_ + e]);
  return x;
}

std::vector<double> ModelSpec::unconstrain(std::span<const double> x) const {
  if (x.size() != dimension()) throw std::invalid_argument("unconstrain: wrong parameter count");
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] > 0.0) || !std::isfinite(x[k])) {
      throw std::domain_error("parameter " + names_[k] + " outside its support");
    }
  }
  std::vector<double> u(x.size());
  const bool hawkes = process_ == ProcessKind::hawkes;
  const std::size_t n_persons = person_count();
  if (kind_ == ModelKind::pooled) {
    const double upper = priors_.pooled_upper;
    for (std::size_t k = 0; k < (hawkes ? 3u : 1u); ++k) {
      if (!(x[k] < upper)) throw std::domain_error("parameter " + names_[k] + " outside (0, upper)");
      u[k] = std::log(x[k]) - std::log(upper - x[k]);
    }
  } else if (kind_ == ModelKind::unpooled) {
    for (std::size_t k = 0; k < (hawkes ? 3 : 1) * n_persons; ++k) u[k] = std::log(x[k]);
  } else {
    const std::size_t blocks = hawkes ? 3 : 1;
    for (std::size_t k = 0; k < 2 * blocks; ++k) u[hyper_ + k] = std::log(x[hyper_ + k]);
    const std::size_t block_start[] = {mu_, alpha_, beta_};
    for (std::size_t b = 0; b < blocks; ++b) {
      const double m = x[hyper_ + b];
      const double s = x[hyper_ + b + blocks];
      const double loc = std::log(m) - 0.5 * s * s;
      for (std::size_t n = 0; n < n_persons; ++n) {
        u[block_start[b] + n] = (std::log(x[block_start[b] + n]) - loc) / s;
      }
    }
  }
  for (std::size_t e = 0; e < n_delta_; ++e) u[delta_ + e] = std::log(x[delta_ + e]);
  return u;
}

HawkesParams ModelSpec::session_params(std::span<const double> x, std::size_t session) const {
  const std::size_t n = session_person_.at(session);
  const bool hawkes = process_ == ProcessKind::hawkes;
  const std::size_t offset = kind_ == ModelKind::pooled ? 0 : n;
  HawkesParams p;
  p.mu = x[mu_ + offset];
  p.alpha = hawkes ? x[alpha_ + offset] : 0.0;
  p.beta = hawkes ? x[beta_ + offset] : 1.0;
  const std::size_t e = session_delta_[session];
  p.mu0 = p.mu + (e == npos ? 0.0 : x[delta_ + e]);
  return p;
}

std::vector<double> population_branching_factor(const ModelSpec& spec, const PosteriorDraws& draws) {
  if (spec.process() != ProcessKind::hawkes) throw std::invalid_argument("model has no branching factor");
  if (draws.dim() != spec.dimension()) throw std::invalid_argument("draws do not match the model");
  if (spec.kind() != ModelKind::unpooled) return draws.column(spec.branching_index());
  const std::vector<std::size_t> idx = spec.person_alpha_indices();
  std::vector<double> out(draws.total(), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto row = draws.row(i);
    for (std::size_t k : idx) out[i] += row[k];
    out[i] /= static_cast<double>(idx.size());
  }
  return out;
}

}  // namespace hawkes
