#pragma once

// Scalar special functions used for calibration: log-gamma, the chi-square
// law (through the regularized incomplete gamma function) and the Gumbel law.
// All functions are pure and reentrant.

namespace simplerc::dist {

/// log Gamma(x) for x > 0 (Lanczos approximation, reflection-free).
double ln_gamma(double x);

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), computed without cancellation.
double gamma_q(double a, double x);

double chi2_cdf(double x, int df);
/// Upper tail 1 - F(x); accurate even when the result is tiny.
double chi2_sf(double x, int df);
double chi2_pdf(double x, int df);

/// Inverse of chi2_cdf for p in [0, 1).
double chi2_quantile(double p, int df);
/// Inverse of chi2_sf for q in (0, 1]; well conditioned deep in the upper tail.
double chi2_upper_quantile(double q, int df);

/// G(x) = exp(-exp(-x)).
double gumbel_cdf(double x);
/// 1 - G(x), accurate for large x.
double gumbel_sf(double x);
/// -log(-log p) for p in (0, 1).
double gumbel_quantile(double p);

}  // namespace simplerc::dist
