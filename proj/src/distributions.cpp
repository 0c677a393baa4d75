#include "tiltbench/distributions.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <type_traits>

#include "tiltbench/error.hpp"

namespace tiltbench {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ParameterDomainError(std::string(what) + " must be finite and > 0, got " +
                               std::to_string(v));
  }
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw ParameterDomainError(std::string(what) + " must be finite");
}

bool is_integer(double x) { return std::isfinite(x) && x == std::floor(x); }

double sample_poisson_small(double mean, RngStream& rng) {
  // multiplication method; fine below the PTRS crossover
  const double limit = std::exp(-mean);
  double k = 0.0;
  double prod = rng.uniform();
  while (prod > limit) {
    k += 1.0;
    prod *= rng.uniform();
  }
  return k;
}

// Hormann's transformed rejection with squeeze (PTRS), mean >= 10.
double sample_poisson_ptrs(double mean, RngStream& rng) {
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return k;
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - std::lgamma(k + 1.0)) {
      return k;
    }
  }
}

}  // namespace

double sample_gamma(double shape, double rate, RngStream& rng) {
  if (shape < 1.0) {
    // boost to shape+1, then scale by U^(1/shape)
    const double g = sample_gamma(shape + 1.0, 1.0, rng);
    return g * std::pow(rng.uniform(), 1.0 / shape) / rate;
  }
  // Marsaglia & Tsang
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

double sample_inverse_gaussian(double mean, double shape, RngStream& rng) {
  // Michael, Schucany & Haas, with the root rearranged to avoid
  // cancellation when mean*v >> shape.
  const double nu = rng.normal();
  const double mv = mean * nu * nu;
  const double root = std::sqrt(4.0 * shape * mv + mv * mv);
  const double denom = root + mv;
  double x = (denom > 0.0) ? 4.0 * mean * shape * mv / (denom * denom) : mean;
  if (mv == 0.0) x = mean;
  if (rng.uniform() <= mean / (mean + x)) return x;
  return mean * mean / x;
}

double sample_poisson(double mean, RngStream& rng) {
  if (mean == 0.0) return 0.0;
  return mean < 10.0 ? sample_poisson_small(mean, rng) : sample_poisson_ptrs(mean, rng);
}

void validate(const DistributionSpec& dist) {
  std::visit(overloaded{
                 [](const Normal& d) {
                   require_finite(d.mean, "Normal mean");
                   require_positive(d.var, "Normal variance");
                 },
                 [](const Gamma& d) {
                   require_positive(d.shape, "Gamma shape");
                   require_positive(d.rate, "Gamma rate");
                 },
                 [](const InverseGamma& d) {
                   require_positive(d.shape, "InverseGamma shape");
                   require_positive(d.scale, "InverseGamma scale");
                 },
                 [](const Exponential& d) { require_positive(d.rate, "Exponential rate"); },
                 [](const HalfCauchy& d) { require_positive(d.scale, "HalfCauchy scale"); },
                 [](const StudentT& d) { require_positive(d.dof, "StudentT dof"); },
                 [](const Poisson& d) {
                   if (!(d.mean >= 0.0) || !std::isfinite(d.mean)) {
                     throw ParameterDomainError("Poisson mean must be finite and >= 0");
                   }
                 },
                 [](const Bernoulli& d) {
                   if (!(d.p >= 0.0 && d.p <= 1.0)) {
                     throw ParameterDomainError("Bernoulli p must lie in [0, 1]");
                   }
                 },
                 [](const InverseGaussian& d) {
                   require_positive(d.mean, "InverseGaussian mean");
                   require_positive(d.shape, "InverseGaussian shape");
                 },
                 [](const LogNormal& d) {
                   require_finite(d.meanlog, "LogNormal meanlog");
                   require_positive(d.varlog, "LogNormal varlog");
                 },
             },
             dist);
}

double draw(const DistributionSpec& dist, RngStream& rng) {
  validate(dist);
  return std::visit(
      overloaded{
          [&](const Normal& d) { return d.mean + std::sqrt(d.var) * rng.normal(); },
          [&](const Gamma& d) { return sample_gamma(d.shape, d.rate, rng); },
          [&](const InverseGamma& d) { return 1.0 / sample_gamma(d.shape, d.scale, rng); },
          [&](const Exponential& d) { return -std::log(rng.uniform()) / d.rate; },
          [&](const HalfCauchy& d) {
            // x^2 | a ~ IG(1/2, 1/a), a ~ IG(1/2, 1)  =>  x ~ C+(0, 1)
            const double a = 1.0 / sample_gamma(0.5, 1.0, rng);
            const double x2 = 1.0 / sample_gamma(0.5, 1.0 / a, rng);
            return d.scale * std::sqrt(x2);
          },
          [&](const StudentT& d) {
            const double z = rng.normal();
            const double g = sample_gamma(0.5 * d.dof, 0.5 * d.dof, rng);
            return z / std::sqrt(g);
          },
          [&](const Poisson& d) { return sample_poisson(d.mean, rng); },
          [&](const Bernoulli& d) { return rng.uniform() < d.p ? 1.0 : 0.0; },
          [&](const InverseGaussian& d) { return sample_inverse_gaussian(d.mean, d.shape, rng); },
          [&](const LogNormal& d) { return std::exp(d.meanlog + std::sqrt(d.varlog) * rng.normal()); },
      },
      dist);
}

double log_pdf(const DistributionSpec& dist, double x) {
  validate(dist);
  if (std::isnan(x)) return std::numeric_limits<double>::quiet_NaN();
  return std::visit(
      overloaded{
          [&](const Normal& d) {
            const double z = x - d.mean;
            return -kLogSqrt2Pi - 0.5 * std::log(d.var) - 0.5 * z * z / d.var;
          },
          [&](const Gamma& d) {
            if (x < 0.0 || (x == 0.0 && d.shape < 1.0)) return -kInf;
            if (x == 0.0) return d.shape == 1.0 ? std::log(d.rate) : -kInf;
            return d.shape * std::log(d.rate) - std::lgamma(d.shape) +
                   (d.shape - 1.0) * std::log(x) - d.rate * x;
          },
          [&](const InverseGamma& d) {
            if (x <= 0.0) return -kInf;
            return d.shape * std::log(d.scale) - std::lgamma(d.shape) -
                   (d.shape + 1.0) * std::log(x) - d.scale / x;
          },
          [&](const Exponential& d) {
            if (x < 0.0) return -kInf;
            return std::log(d.rate) - d.rate * x;
          },
          [&](const HalfCauchy& d) {
            if (x < 0.0) return -kInf;
            const double z = x / d.scale;
            return std::log(2.0 / (std::numbers::pi * d.scale)) - std::log1p(z * z);
          },
          [&](const StudentT& d) {
            const double nu = d.dof;
            return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                   0.5 * std::log(nu * std::numbers::pi) -
                   0.5 * (nu + 1.0) * std::log1p(x * x / nu);
          },
          [&](const Poisson& d) {
            if (x < 0.0 || !is_integer(x)) return -kInf;
            if (d.mean == 0.0) return x == 0.0 ? 0.0 : -kInf;
            return x * std::log(d.mean) - d.mean - std::lgamma(x + 1.0);
          },
          [&](const Bernoulli& d) {
            if (x == 1.0) return std::log(d.p);
            if (x == 0.0) return std::log1p(-d.p);
            return -kInf;
          },
          [&](const InverseGaussian& d) {
            if (x <= 0.0) return -kInf;
            const double z = x - d.mean;
            return 0.5 * std::log(d.shape / (2.0 * std::numbers::pi)) - 1.5 * std::log(x) -
                   d.shape * z * z / (2.0 * d.mean * d.mean * x);
          },
          [&](const LogNormal& d) {
            if (x <= 0.0) return -kInf;
            const double z = std::log(x) - d.meanlog;
            return -kLogSqrt2Pi - 0.5 * std::log(d.varlog) - std::log(x) - 0.5 * z * z / d.varlog;
          },
      },
      dist);
}

double mean(const DistributionSpec& dist) {
  validate(dist);
  return std::visit(
      overloaded{
          [](const Normal& d) { return d.mean; },
          [](const Gamma& d) { return d.shape / d.rate; },
          [](const InverseGamma& d) { return d.shape > 1.0 ? d.scale / (d.shape - 1.0) : kInf; },
          [](const Exponential& d) { return 1.0 / d.rate; },
          [](const HalfCauchy&) { return kInf; },
          [](const StudentT& d) { return d.dof > 1.0 ? 0.0 : kInf; },
          [](const Poisson& d) { return d.mean; },
          [](const Bernoulli& d) { return d.p; },
          [](const InverseGaussian& d) { return d.mean; },
          [](const LogNormal& d) { return std::exp(d.meanlog + 0.5 * d.varlog); },
      },
      dist);
}

double variance(const DistributionSpec& dist) {
  validate(dist);
  return std::visit(
      overloaded{
          [](const Normal& d) { return d.var; },
          [](const Gamma& d) { return d.shape / (d.rate * d.rate); },
          [](const InverseGamma& d) {
            if (d.shape <= 2.0) return kInf;
            const double a1 = d.shape - 1.0;
            return d.scale * d.scale / (a1 * a1 * (d.shape - 2.0));
          },
          [](const Exponential& d) { return 1.0 / (d.rate * d.rate); },
          [](const HalfCauchy&) { return kInf; },
          [](const StudentT& d) { return d.dof > 2.0 ? d.dof / (d.dof - 2.0) : kInf; },
          [](const Poisson& d) { return d.mean; },
          [](const Bernoulli& d) { return d.p * (1.0 - d.p); },
          [](const InverseGaussian& d) { return d.mean * d.mean * d.mean / d.shape; },
          [](const LogNormal& d) {
            return std::expm1(d.varlog) * std::exp(2.0 * d.meanlog + d.varlog);
          },
      },
      dist);
}

std::string name(const DistributionSpec& dist) {
  return std::visit(overloaded{
                        [](const Normal&) { return std::string("Normal"); },
                        [](const Gamma&) { return std::string("Gamma"); },
                        [](const InverseGamma&) { return std::string("InverseGamma"); },
                        [](const Exponential&) { return std::string("Exponential"); },
                        [](const HalfCauchy&) { return std::string("HalfCauchy"); },
                        [](const StudentT&) { return std::string("StudentT"); },
                        [](const Poisson&) { return std::string("Poisson"); },
                        [](const Bernoulli&) { return std::string("Bernoulli"); },
                        [](const InverseGaussian&) { return std::string("InverseGaussian"); },
                        [](const LogNormal&) { return std::string("LogNormal"); },
                    },
                    dist);
}

}  // namespace tiltbench
