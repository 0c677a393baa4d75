#pragma once

#include <string>
#include <variant>

#include "tiltbench/rng.hpp"

namespace tiltbench {

// Parameterizations are fixed library-wide. Gamma is shape-rate (mean
// shape/rate); InverseGamma is shape-scale (mean scale/(shape-1)).

struct Normal {
  double mean = 0.0;
  double var = 1.0;
};

struct Gamma {
  double shape = 1.0;
  double rate = 1.0;
};

struct InverseGamma {
  double shape = 1.0;
  double scale = 1.0;
};

struct Exponential {
  double rate = 1.0;
};

struct HalfCauchy {
  double scale = 1.0;
};

struct StudentT {
  double dof = 1.0;
};

struct Poisson {
  double mean = 1.0;
};

struct Bernoulli {
  double p = 0.5;
};

/// Wald distribution; drives the Laplace-prior mixing-variance update.
struct InverseGaussian {
  double mean = 1.0;
  double shape = 1.0;
};

/// exp(N(meanlog, varlog)).
struct LogNormal {
  double meanlog = 0.0;
  double varlog = 1.0;
};

using DistributionSpec = std::variant<Normal, Gamma, InverseGamma, Exponential, HalfCauchy,
                                      StudentT, Poisson, Bernoulli, InverseGaussian, LogNormal>;

/// Throws ParameterDomainError if any parameter is outside its domain.
void validate(const DistributionSpec& dist);

/// Draws one variate. Integer-valued families return an integral double.
double draw(const DistributionSpec& dist, RngStream& rng);

/// Natural-log density (or mass). Points outside the support give -inf.
double log_pdf(const DistributionSpec& dist, double x);

/// Analytic mean and variance; +inf where the moment does not exist.
double mean(const DistributionSpec& dist);
double variance(const DistributionSpec& dist);

std::string name(const DistributionSpec& dist);

// Direct samplers used on hot paths; parameters are not re-validated.
double sample_gamma(double shape, double rate, RngStream& rng);
double sample_inverse_gaussian(double mean, double shape, RngStream& rng);
double sample_poisson(double mean, RngStream& rng);

}  // namespace tiltbench
