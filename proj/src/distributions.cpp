#include "simplerc/distributions.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "simplerc/error.hpp"

namespace simplerc::dist {
namespace {

// Godfrey's g = 7, n = 9 Lanczos coefficients.
constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

constexpr int kMaxIter = 1000;
constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = 1e-300;

void require_df(int df) {
  if (df < 1) throw ValidationError("chi-square degrees of freedom must be >= 1, got " + std::to_string(df));
}

// log of x^a e^-x / Gamma(a), the common prefactor of both expansions.
double log_prefactor(double a, double x) { return a * std::log(x) - x - ln_gamma(a); }

double series_p(double a, double x) {
  double ap = a;
  double del = 1.0 / a;
  double sum = del;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kEps) break;
  }
  return sum * std::exp(log_prefactor(a, x));
}

// Modified Lentz evaluation of the continued fraction for Q(a, x).
double continued_fraction_q(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return std::exp(log_prefactor(a, x)) * h;
}

// Solve log F(x) = log target for a monotone F on [0, inf) using a bracketed
// Newton iteration in the log domain. `log_f` returns log F(x) and
// `log_slope` its derivative.
template <typename LogF, typename LogSlope>
double invert_log_monotone(LogF log_f, LogSlope log_slope, double log_target, bool increasing,
                           double guess) {
  double lo = 0.0;
  double hi = std::max(1.0, guess);
  auto below = [&](double x) {
    const double v = log_f(x);
    return increasing ? v < log_target : v > log_target;
  };
  while (below(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw ConvergenceError("quantile bracket expansion failed");
  }
  double x = (guess > lo && guess < hi) ? guess : 0.5 * (lo + hi);
  for (int it = 0; it < 400; ++it) {
    const double fx = log_f(x) - log_target;
    if (fx == 0.0) return x;
    if ((fx < 0.0) == increasing) lo = x; else hi = x;
    const double slope = log_slope(x);
    double next = x - fx / slope;
    if (!std::isfinite(next) || next <= lo || next >= hi) next = 0.5 * (lo + hi);
    if (std::fabs(next - x) <= 4.0 * kEps * std::max(x, kTiny) || hi - lo <= 4.0 * kEps * hi) return next;
    x = next;
  }
  return x;
}

double wilson_hilferty(double p_lower, int df) {
  // Normal quantile via a rational approximation; only used as a starting point.
  const double pp = std::clamp(p_lower, 1e-300, 1.0 - 1e-16);
  const double t = std::sqrt(-2.0 * std::log(pp < 0.5 ? pp : 1.0 - pp));
  double z = t - (2.515517 + 0.802853 * t + 0.010328 * t * t) /
                     (1.0 + 1.432788 * t + 0.189269 * t * t + 0.001308 * t * t * t);
  if (pp < 0.5) z = -z;
  const double k = df;
  const double c = 2.0 / (9.0 * k);
  const double g = k * std::pow(1.0 - c + z * std::sqrt(c), 3.0);
  return g > 0.0 ? g : 0.5 * k * pp;
}

}  // namespace

double ln_gamma(double x) {
  if (!(x > 0.0)) throw ValidationError("ln_gamma requires x > 0");
  if (x == 1.0 || x == 2.0) return 0.0;
  if (x < 0.5) return ln_gamma(x + 1.0) - std::log(x);
  const double xm = x - 1.0;
  double a = kLanczos[0];
  for (std::size_t i = 1; i < kLanczos.size(); ++i) a += kLanczos[i] / (xm + static_cast<double>(i));
  const double t = xm + kLanczosG + 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (xm + 0.5) * std::log(t) - t + std::log(a);
}

double gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw ValidationError("gamma_p requires a > 0 and x >= 0");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return x < a + 1.0 ? series_p(a, x) : 1.0 - continued_fraction_q(a, x);
}

double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw ValidationError("gamma_q requires a > 0 and x >= 0");
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return x < a + 1.0 ? 1.0 - series_p(a, x) : continued_fraction_q(a, x);
}

double chi2_cdf(double x, int df) {
  require_df(df);
  if (std::isnan(x)) throw ValidationError("chi2_cdf: NaN argument");
  if (x <= 0.0) return 0.0;
  return gamma_p(0.5 * df, 0.5 * x);
}

double chi2_sf(double x, int df) {
  require_df(df);
  if (std::isnan(x)) throw ValidationError("chi2_sf: NaN argument");
  if (x <= 0.0) return 1.0;
  return gamma_q(0.5 * df, 0.5 * x);
}

double chi2_pdf(double x, int df) {
  require_df(df);
  if (x < 0.0) return 0.0;
  const double a = 0.5 * df;
  if (x == 0.0) return df == 2 ? 0.5 : (df < 2 ? std::numeric_limits<double>::infinity() : 0.0);
  return std::exp((a - 1.0) * std::log(x) - 0.5 * x - a * std::numbers::ln2 - ln_gamma(a));
}

double chi2_quantile(double p, int df) {
  require_df(df);
  if (!(p >= 0.0 && p < 1.0)) throw ValidationError("chi2_quantile requires p in [0, 1)");
  if (p == 0.0) return 0.0;
  const auto log_f = [df](double x) { return x <= 0.0 ? -INFINITY : std::log(chi2_cdf(x, df)); };
  const auto slope = [df](double x) { return chi2_pdf(x, df) / chi2_cdf(x, df); };
  return invert_log_monotone(log_f, slope, std::log(p), true, wilson_hilferty(p, df));
}

double chi2_upper_quantile(double q, int df) {
  require_df(df);
  if (!(q > 0.0 && q <= 1.0)) throw ValidationError("chi2_upper_quantile requires q in (0, 1]");
  if (q == 1.0) return 0.0;
  const auto log_f = [df](double x) { return std::log(chi2_sf(x, df)); };
  const auto slope = [df](double x) { return -chi2_pdf(x, df) / chi2_sf(x, df); };
  return invert_log_monotone(log_f, slope, std::log(q), false, wilson_hilferty(1.0 - q, df));
}

double gumbel_cdf(double x) { return std::exp(-std::exp(-x)); }

double gumbel_sf(double x) { return -std::expm1(-std::exp(-x)); }

double gumbel_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("gumbel_quantile requires p in (0, 1)");
  return -std::log(-std::log(p));
}

}  // namespace simplerc::dist
