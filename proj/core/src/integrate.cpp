#include "npqs/integrate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

#include "npqs/errors.hpp"

namespace npqs {

const char* to_string(RadialMode mode) {
  switch (mode) {
    case RadialMode::UniformVolume: return "uniform_volume";
    case RadialMode::BetaTilt: return "beta_tilt";
  }
  return "?";
}

namespace {

// Running moments of the full value and of the truncated partials.
struct Moments {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;
  std::array<double, 3> trunc_sum{};
  std::array<double, 3> trunc_mean{};
  std::array<double, 3> trunc_m2{};
  std::size_t nonfinite = 0;

  void add(const SampleValue& s) {
    const double x = s.partial[3];
    if (!std::isfinite(x)) {
      ++nonfinite;
      return;
    }
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
    for (std::size_t k = 0; k < 3; ++k) {
      const double y = s.partial[k];
      trunc_sum[k] += y;
      const double dy = y - trunc_mean[k];
      trunc_mean[k] += dy / static_cast<double>(count);
      trunc_m2[k] += dy * (y - trunc_mean[k]);
    }
  }

  void merge(const Moments& o) {
    nonfinite += o.nonfinite;
    if (o.count == 0) return;
    if (count == 0) {
      const std::size_t nf = nonfinite;
      *this = o;
      nonfinite = nf;
      return;
    }
    const double na = static_cast<double>(count);
    const double nb = static_cast<double>(o.count);
    const double delta = o.mean - mean;
    const double total = na + nb;
    mean += delta * nb / total;
    m2 += o.m2 + delta * delta * na * nb / total;
    count += o.count;
    for (std::size_t k = 0; k < 3; ++k) {
      trunc_sum[k] += o.trunc_sum[k];
      const double dk = o.trunc_mean[k] - trunc_mean[k];
      trunc_mean[k] += dk * nb / total;
      trunc_m2[k] += o.trunc_m2[k] + dk * dk * na * nb / total;
    }
  }

  double std_error() const {
    if (count < 2) return 0.0;
    const double c = static_cast<double>(count);
    return std::sqrt(std::max(0.0, m2 / (c - 1.0) / c));
  }
};

struct WorkUnit {
  std::uint64_t begin;
  std::uint64_t end;
  std::size_t quarter;
};

}  // namespace

SampleValue SampleValue::scalar(double value, double one_minus_r_sq) {
  SampleValue s;
  for (std::size_t k = 0; k < 3; ++k) {
    s.partial[k] = one_minus_r_sq >= kTruncationOmega[k] ? value : 0.0;
  }
  s.partial[3] = value;
  return s;
}

IntegralEstimate run_estimator(std::size_t n_samples, const SamplerConfig& cfg,
                               const SampleFn& fn) {
  if (n_samples == 0) throw ParameterError("n_samples>=1");
  const std::size_t shards = std::max<std::size_t>(1, cfg.shards);

  std::vector<WorkUnit> units;
  for (std::size_t q = 0; q < 4; ++q) {
    const std::uint64_t qb = n_samples * q / 4;
    const std::uint64_t qe = n_samples * (q + 1) / 4;
    const std::uint64_t len = qe - qb;
    for (std::size_t s = 0; s < shards; ++s) {
      const std::uint64_t b = qb + len * s / shards;
      const std::uint64_t e = qb + len * (s + 1) / shards;
      if (e > b) units.push_back({b, e, q});
    }
  }

  std::vector<Moments> results(units.size());
  std::vector<std::exception_ptr> errors(units.size());
  std::atomic<std::size_t> next{0};

  const auto worker = [&] {
    for (std::size_t u = next++; u < units.size(); u = next++) {
      try {
        Moments m;
        for (std::uint64_t i = units[u].begin; i < units[u].end; ++i) m.add(fn(i));
        results[u] = m;
      } catch (...) {
        errors[u] = std::current_exception();
      }
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(cfg.workers, 1, units.size());
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  IntegralEstimate est;
  est.n_samples = n_samples;
  Moments total;
  std::size_t u = 0;
  for (std::size_t q = 0; q < 4; ++q) {
    for (; u < units.size() && units[u].quarter == q; ++u) total.merge(results[u]);
    if (q == 0 || q == 1 || q == 3) {
      const std::size_t slot = q == 0 ? 0 : (q == 1 ? 1 : 2);
      est.prefix_value[slot] = total.mean;
      est.prefix_error[slot] = total.std_error();
    }
  }

  const double n = static_cast<double>(total.count + total.nonfinite);
  est.value = total.mean * static_cast<double>(total.count) / n;
  est.std_error = total.std_error();
  for (std::size_t k = 0; k < 3; ++k) {
    est.truncated[k] = total.trunc_sum[k] / n;
    if (total.count >= 2) {
      const double c = static_cast<double>(total.count);
      est.truncated_error[k] = std::sqrt(total.trunc_m2[k] / (c - 1.0) / c);
    }
  }

  if (total.nonfinite > 0) {
    est.value = std::numeric_limits<double>::infinity();
    est.diverged = true;
    est.divergence_reason = "non-finite sample";
    return est;
  }
  apply_divergence_tests(est);
  return est;
}

void apply_divergence_tests(IntegralEstimate& est) {
  if (est.diverged) return;

  const auto& v = est.prefix_value;
  const auto& e = est.prefix_error;
  const auto jump = [&](std::size_t i, std::size_t j) {
    const double sigma = std::hypot(e[i], e[j]);
    return std::abs(v[j] - v[i]) > 5.0 * sigma + 1e-300;
  };
  if (jump(0, 1) && jump(1, 2)) {
    est.diverged = true;
    est.divergence_reason = "doubling test";
    return;
  }

  // Growth without slope decay: the increment over the last decade of
  // 1-rho^2 is at least kTruncationGrowth times the one before. A factor of 1
  // flags log^p-type tails such as |log(1-z1)|^7, whose per-decade increments
  // still grow at these radii although the integral converges.
  const auto& t = est.truncated;
  const double d1 = t[1] - t[0];
  const double d2 = t[2] - t[1];
  if (d2 >= kTruncationGrowth * d1 && d2 > 1e-3 * std::abs(t[2])) {
    est.diverged = true;
    est.divergence_reason = "truncation growth";
  }
}

BallPoint sample_uniform_ball(std::size_t n, SampleStream& stream) {
  BallPoint z(n);
  double norm_sq = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double re = stream.normal();
    const double im = stream.normal();
    z[k] = Complex(re, im);
    norm_sq += re * re + im * im;
  }
  const double r = std::pow(stream.uniform(), 1.0 / (2.0 * static_cast<double>(n)));
  z *= r / std::sqrt(norm_sq);
  return z;
}

double sample_gamma(double shape, SampleStream& stream) {
  if (shape < 1.0) {
    // Gamma(k) = Gamma(k+1) U^{1/k}
    const double g = sample_gamma(shape + 1.0, stream);
    return g * std::pow(stream.uniform(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = stream.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = stream.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double c_alpha(std::size_t n, double alpha) {
  if (!(alpha > -1.0)) throw ParameterError("alpha>-1");
  const double nd = static_cast<double>(n);
  return std::exp(std::lgamma(nd + alpha + 1.0) - std::lgamma(nd + 1.0) -
                  std::lgamma(alpha + 1.0));
}

double weight_dV_alpha(const BallPoint& z, double alpha) {
  const double c = c_alpha(z.dimension(), alpha);
  if (alpha == 0.0) return c;
  return c * std::pow(1.0 - z.norm_sq(), alpha);
}

BallSampler::BallSampler(std::size_t n, double tilt, RadialMode mode)
    : n_(n), tilt_(mode == RadialMode::UniformVolume ? 0.0 : tilt), mode_(mode) {
  if (n == 0 || n > kMaxDimension) throw ParameterError("1<=n<=8");
  if (!(tilt_ > -1.0)) throw ParameterError("tilt>-1");
  norm_ = c_alpha(n, tilt_);
}

BallSampler::BallSampler(std::size_t n, double tilt, const CVector& focus, RadialMode mode)
    : BallSampler(n, tilt, mode) {
  if (focus.dimension() != n) throw DomainError("focus dimension mismatch");
  const double norm = focus.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) return;
  const CVector zeta = focus * Complex(1.0 / norm);
  base_weight_ = 0.5;
  for (int j = 1; j <= 4; ++j) {
    const double eps = std::pow(10.0, -j);
    centers_.emplace_back(zeta * Complex(1.0 - eps), eps * (2.0 - eps));
    weights_.push_back(0.125);
  }
}

BallSampler::BallSampler(std::size_t n, double tilt, const std::optional<CVector>& focus,
                         const BallPoint& origin, RadialMode mode)
    : BallSampler(n, tilt, mode) {
  if (focus) *this = BallSampler(n, tilt, *focus, mode);
  if (origin.dimension() != n) throw DomainError("origin dimension mismatch");
  if (origin.is_zero()) return;
  if (!origin.is_interior()) throw DomainError("origin outside the ball");
  const double w = centers_.empty() ? 0.5 : 0.25;
  base_weight_ -= w;
  centers_.emplace_back(origin);
  weights_.push_back(w);
}

BallSampler::Draw BallSampler::draw_base(SampleStream& stream) const {
  Draw d;
  d.z = BallPoint(n_);
  double dir_sq = 0.0;
  for (std::size_t k = 0; k < n_; ++k) {
    const double re = stream.normal();
    const double im = stream.normal();
    d.z[k] = Complex(re, im);
    dir_sq += re * re + im * im;
  }
  double t;
  if (mode_ == RadialMode::UniformVolume) {
    const double log_t = std::log(stream.uniform()) / static_cast<double>(n_);
    t = std::exp(log_t);
    d.omega = -std::expm1(log_t);
  } else {
    const double x = sample_gamma(static_cast<double>(n_), stream);
    const double y = sample_gamma(tilt_ + 1.0, stream);
    t = x / (x + y);
    d.omega = y / (x + y);
  }
  d.z *= std::sqrt(t / dir_sq);
  return d;
}

BallSampler::Draw BallSampler::draw(SampleStream& stream) const {
  if (centers_.empty()) return draw_base(stream);

  const double pick = stream.uniform();
  Draw d = draw_base(stream);
  if (pick >= base_weight_) {
    std::size_t j = 0;
    double edge = base_weight_ + weights_[0];
    while (pick >= edge && j + 1 < centers_.size()) edge += weights_[++j];
    const MobiusMap& m = centers_[j];
    const double omega = m.one_minus_phi_sq(d.z, d.omega);
    d.z = m.apply_unchecked(d.z);
    d.omega = omega;
  }

  const double power = static_cast<double>(n_) + 1.0 + tilt_;
  double density = base_weight_;
  for (std::size_t j = 0; j < centers_.size(); ++j) {
    const MobiusMap& m = centers_[j];
    const double ratio = m.one_minus_a_sq() / std::norm(1.0 - inner(d.z, m.a()));
    density += weights_[j] * std::pow(ratio, power);
  }
  d.inv_mixture = 1.0 / density;
  return d;
}

double BallSampler::dv_weight(const Draw& d, double exponent) const {
  const double e = exponent - tilt_;
  const double radial = e == 0.0 ? 1.0 : std::pow(d.omega, e);
  return radial * d.inv_mixture / norm_;
}

double BallSampler::dv_alpha_weight(const Draw& d, double alpha) const {
  if (tilt_ == alpha) return d.inv_mixture;
  return c_alpha(n_, alpha) * dv_weight(d, alpha);
}

namespace {

template <typename Fn>
auto with_sample_context(std::uint64_t index, const BallPoint& z, Fn&& fn) {
  try {
    return fn();
  } catch (const EvalError& e) {
    throw SampleError(e.what(), index, to_string(z));
  }
}

}  // namespace

IntegralEstimate integrate_ball(const BallIntegrand& g, double alpha, const SamplerConfig& cfg,
                                std::size_t n) {
  c_alpha(n, alpha);
  const BallSampler sampler(n, alpha, cfg.radial_mode);
  return run_estimator(cfg.n_samples, cfg, [&](std::uint64_t i) {
    SampleStream stream(cfg.seed, i, kTagOuter);
    const auto d = sampler.draw(stream);
    const double v = with_sample_context(i, d.z, [&] { return g(d.z, d.omega); });
    return SampleValue::scalar(v * sampler.dv_alpha_weight(d, alpha), d.omega);
  });
}

IntegralEstimate integrate_lambda(const BallIntegrand& g, double boundary_order,
                                  const SamplerConfig& cfg, std::size_t n,
                                  std::optional<CVector> focus) {
  const double tilt = std::max(kMinTilt, boundary_order - static_cast<double>(n) - 1.0);
  const BallSampler sampler = focus ? BallSampler(n, tilt, *focus, cfg.radial_mode)
                                    : BallSampler(n, tilt, cfg.radial_mode);
  const double lambda_exp = -static_cast<double>(n) - 1.0;
  return run_estimator(cfg.n_samples, cfg, [&](std::uint64_t i) {
    SampleStream stream(cfg.seed, i, kTagOuter);
    const auto d = sampler.draw(stream);
    const double v = with_sample_context(i, d.z, [&] { return g(d.z, d.omega); });
    return SampleValue::scalar(v * sampler.dv_weight(d, lambda_exp), d.omega);
  });
}

IntegralEstimate double_integral(const PairIntegrand& G, double alpha, const SamplerConfig& cfg,
                                 std::size_t n, DoubleMode mode) {
  c_alpha(n, alpha);
  const BallSampler sampler(n, alpha, cfg.radial_mode);
  const double gamma = static_cast<double>(n) + 1.0 + alpha;
  return run_estimator(cfg.n_samples, cfg, [&](std::uint64_t i) {
    SampleStream zs(cfg.seed, i, kTagPair);
    SampleStream us(cfg.seed, i, kTagPair | 1u);
    const auto dz = sampler.draw(zs);
    const auto du = sampler.draw(us);
    const double weight = sampler.dv_alpha_weight(dz, alpha) * sampler.dv_alpha_weight(du, alpha);
    const double omega = std::min(dz.omega, du.omega);
    if (mode == DoubleMode::Plain) {
      const double v = with_sample_context(i, dz.z, [&] { return G(dz.z, du.z); });
      return SampleValue::scalar(v * weight, omega);
    }
    const MobiusMap phi_z(dz.z, dz.omega);
    const BallPoint w = phi_z.apply_unchecked(du.z);
    const double k = kernel_weight_k(dz.z, dz.omega, du.z, gamma);
    const double v = with_sample_context(i, dz.z, [&] { return G(dz.z, w); });
    return SampleValue::scalar(v * k * weight, omega);
  });
}

std::size_t sup_coarse_count(std::size_t n, std::size_t budget) { return 1 + 8 * n + budget / 4; }

namespace {

struct StopSearch {};

class SupSearch {
 public:
  SupSearch(const std::function<double(const BallPoint&)>& F, std::size_t n, double r_max,
            std::size_t budget, const std::function<bool()>& stop)
      : F_(F), stop_(stop), n_(n), r_max_(r_max), budget_(budget) {}

  double eval(const BallPoint& a) {
    const double raw = F_(a);
    const double v = std::isnan(raw) ? -std::numeric_limits<double>::infinity() : raw;
    result_.probes.push_back({a, raw});
    if (result_.probes.size() == 1 || v > best_) {
      best_ = v;
      result_.a_star = a;
      result_.value = raw;
    }
    if (stop_ && stop_()) throw StopSearch{};
    return v;
  }

  BallPoint clamp(const std::vector<double>& x) const {
    BallPoint a(n_);
    for (std::size_t k = 0; k < n_; ++k) a[k] = Complex(x[2 * k], x[2 * k + 1]);
    const double r = a.norm();
    if (r > r_max_) a *= r_max_ / r;
    return a;
  }

  std::vector<double> coords(const BallPoint& a) const {
    std::vector<double> x(2 * n_);
    for (std::size_t k = 0; k < n_; ++k) {
      x[2 * k] = a[k].real();
      x[2 * k + 1] = a[k].imag();
    }
    return x;
  }

  std::size_t used() const { return result_.probes.size(); }
  std::size_t remaining() const { return budget_ - used(); }
  SupResult take() { return std::move(result_); }
  const BallPoint& best_point() const { return result_.a_star; }

 private:
  const std::function<double(const BallPoint&)>& F_;
  const std::function<bool()>& stop_;
  std::size_t n_;
  double r_max_;
  std::size_t budget_;
  double best_ = -std::numeric_limits<double>::infinity();
  SupResult result_;
};

void nelder_mead(SupSearch& s, std::size_t dim) {
  if (s.remaining() < dim + 2) return;

  struct Vertex {
    std::vector<double> x;
    double f;  // minimized: -F
  };
  const auto objective = [&](const std::vector<double>& x) { return -s.eval(s.clamp(x)); };

  const std::vector<double> x0 = s.coords(s.best_point());
  std::vector<Vertex> simplex;
  simplex.push_back({x0, objective(x0)});
  for (std::size_t i = 0; i < dim; ++i) {
    std::vector<double> x = x0;
    x[i] += x[i] > 0.0 ? -0.1 : 0.1;
    simplex.push_back({x, objective(x)});
  }

  const auto blend = [](const std::vector<double>& a, const std::vector<double>& b, double t) {
    std::vector<double> r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + t * (b[i] - a[i]);
    return r;
  };

  while (s.remaining() > 0) {
    std::stable_sort(simplex.begin(), simplex.end(),
                     [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
    double diameter = 0.0;
    for (std::size_t v = 1; v <= dim; ++v) {
      for (std::size_t i = 0; i < dim; ++i) {
        diameter = std::max(diameter, std::abs(simplex[v].x[i] - simplex[0].x[i]));
      }
    }
    if (diameter < 1e-7) break;

    std::vector<double> centroid(dim, 0.0);
    for (std::size_t v = 0; v < dim; ++v) {
      for (std::size_t i = 0; i < dim; ++i) centroid[i] += simplex[v].x[i] / static_cast<double>(dim);
    }
    Vertex& worst = simplex[dim];

    const auto reflected = blend(centroid, worst.x, -1.0);
    const double fr = objective(reflected);
    if (fr < simplex[0].f) {
      if (s.remaining() == 0) {
        worst = {reflected, fr};
        break;
      }
      const auto expanded = blend(centroid, worst.x, -2.0);
      const double fe = objective(expanded);
      worst = fe < fr ? Vertex{expanded, fe} : Vertex{reflected, fr};
      continue;
    }
    if (fr < simplex[dim - 1].f) {
      worst = {reflected, fr};
      continue;
    }
    if (s.remaining() == 0) break;
    const bool outside = fr < worst.f;
    const auto contracted = blend(centroid, outside ? reflected : worst.x, 0.5);
    const double fc = objective(contracted);
    if (fc < std::min(fr, worst.f)) {
      worst = {contracted, fc};
      continue;
    }
    for (std::size_t v = 1; v <= dim && s.remaining() > 0; ++v) {
      simplex[v].x = blend(simplex[0].x, simplex[v].x, 0.5);
      simplex[v].f = objective(simplex[v].x);
    }
  }
}

}  // namespace

SupResult sup_search(const std::function<double(const BallPoint&)>& F, std::size_t n,
                     double r_max, std::size_t budget, std::uint64_t seed,
                     const std::function<bool()>& stop) {
  if (n == 0 || n > kMaxDimension) throw ParameterError("1<=n<=8");
  if (!(r_max > 0.0 && r_max < 1.0)) throw ParameterError("0<r_max<1");
  const std::size_t coarse = sup_coarse_count(n, budget);
  if (budget < coarse) {
    throw ParameterError("sup budget " + std::to_string(budget) + " below the " +
                         std::to_string(coarse) + " coarse points");
  }

  const std::array<double, 4> radii{0.3, 0.6, 0.8, r_max};
  SupSearch s(F, n, r_max, budget, stop);
  try {
    s.eval(BallPoint(n));
    for (double r : radii) {
      for (std::size_t k = 0; k < n; ++k) {
        s.eval(BallPoint::basis(n, k) * Complex(r));
        s.eval(BallPoint::basis(n, k) * Complex(-r));
      }
    }
    for (std::size_t j = 0; j < budget / 4; ++j) {
      SampleStream stream(seed, j, kTagSup);
      BallPoint dir(n);
      for (std::size_t k = 0; k < n; ++k) dir[k] = Complex(stream.normal(), stream.normal());
      s.eval(dir * Complex(radii[j % radii.size()] / dir.norm()));
    }
    nelder_mead(s, 2 * n);
  } catch (const StopSearch&) {
  }
  return s.take();
}

}  // namespace npqs
