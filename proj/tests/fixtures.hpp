#pragma once

#include <cstdint>

#include "simplerc/model.hpp"
#include "simplerc/rng.hpp"

namespace simplerc::testing {

/// Rows drawn uniformly then normalized; deterministic in `seed`.
inline Matrix random_membership(Index n, Index K, std::uint64_t seed) {
  rng::CounterStream s(seed);
  Matrix Pi(n, K);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < K; ++k) Pi(i, k) = 0.05 + s.next_uniform();
    Pi.row(i) /= Pi.row(i).sum();
  }
  return Pi;
}

/// Symmetric, diagonally dominant kernel with entries in [0, 1].
inline Matrix random_kernel(Index K, std::uint64_t seed) {
  rng::CounterStream s(seed);
  Matrix P(K, K);
  for (Index a = 0; a < K; ++a) {
    P(a, a) = 0.7 + 0.3 * s.next_uniform();
    for (Index b = a + 1; b < K; ++b) P(a, b) = P(b, a) = 0.3 * s.next_uniform() / static_cast<double>(K);
  }
  return P;
}

inline NetworkModel random_mm(Index n, Index K, double theta, std::uint64_t seed) {
  NetworkModel m;
  m.membership = random_membership(n, K, rng::derive(seed, 1));
  m.kernel = random_kernel(K, rng::derive(seed, 2));
  m.degrees = DegreeProfile::mm(theta);
  return m;
}

inline NetworkModel random_dcmm(Index n, Index K, std::uint64_t seed) {
  NetworkModel m = random_mm(n, K, 1.0, seed);
  rng::CounterStream s(rng::derive(seed, 3));
  Vector w(n);
  for (Index i = 0; i < n; ++i) w(i) = 0.4 + 0.5 * s.next_uniform();
  m.degrees = DegreeProfile::dcmm(w);
  return m;
}

/// Example-1 layout at reduced size.
inline PresetParams desk_params(int example, Index n, double signal) {
  PresetParams p;
  p.example = example;
  p.n = n;
  p.n0 = n / 10;
  if (example == 2 || example == 4) p.r = std::sqrt(signal);
  else p.theta = signal;
  p.degree_seed = 99;
  return p;
}

}  // namespace simplerc::testing
