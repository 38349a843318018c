// Walks through the library on the scalar linear benchmark
//   dX = (-X + Y/2) dt + eps dL^{1/eps},   dY = (X - Y)/eps dt + dL,
// with the Gaussian-shaped Levy measure nu(dz) = exp(-z^2) dz.

#include "levyldp/levyldp.hpp"

#include <cstdio>

using namespace levyldp;

int main() {
  auto sys = linear_benchmark();
  auto spec = LevyMeasureSpec::gaussian(1);
  JumpNoise noise(spec);
  DriftFn abar = linear_abar(linear_benchmark_spec());  // abar(x) = -x/2

  // =========================================================================
  // One slow-fast path next to the averaged flow
  // =========================================================================
  const double eps = 0.05, T = 2.0;
  auto path = integrate_multiscale(sys, noise, eps, scalar_vec(1.0), scalar_vec(0.0), T, 0.1 * eps, Rng(1));
  auto flow = solve_averaged_ode(abar, scalar_vec(1.0), T);
  double sup = 0.0;
  for (std::size_t i = 0; i < path.t.size(); ++i) sup = std::max(sup, std::abs(path.x[i][0] - flow(path.t[i])[0]));
  std::printf("path: eps = %g, X(T) = %.4f, averaged flow %.4f, sup deviation %.4f\n", eps, path.x.back()[0],
              flow(T)[0], sup);

  // =========================================================================
  // Averaged coefficient at one frozen slow state
  // =========================================================================
  InvariantOptions io;
  io.T_long = 2000.0;
  auto est = estimate_invariant(sys, noise, scalar_vec(1.0), scalar_vec(0.0), Rng(2), io);
  std::printf("abar(1) ~ %.4f +- %.4f (exact -0.5), stationary variance %.4f\n", est.abar[0], est.abar_stderr[0],
              est.variance[0]);

  // =========================================================================
  // Rate function and quasi-potential
  // =========================================================================
  auto p = SkeletonProblem::from(AveragedSystem::from(sys, abar), spec);
  ActionOptions opt;
  opt.intervals = 8;
  auto r = rate_function(p, scalar_vec(0.0), scalar_vec(0.5), 1.0, opt);
  if (r.value) std::printf("I(0 -> 0.5, T = 1) = %.5f (constraint violation %.1e)\n", *r.value, r.violation);
  auto v = quasi_potential(p, scalar_vec(0.0), scalar_vec(1.1), {1.0, 2.0, 4.0}, opt);
  if (v.value) std::printf("V(0, 1.1) = %.5f at T* = %g\n", *v.value, v.T_star);

  // =========================================================================
  // Exit from (-1, 1)
  // =========================================================================
  ExitExperimentConfig ec;
  ec.eps_grid = {0.3};
  ec.trials = 200;
  auto levels = run_exit_trials(sys, noise, ec, Rng(3));
  std::vector<double> sig;
  for (const auto& rec : levels[0].records) sig.push_back(rec.sigma);
  std::printf("exit at eps = 0.3: median time %.3f over %zu trials\n", median(sig), sig.size());

  // =========================================================================
  // Pure-jump toy model: exact big-jump tail
  // =========================================================================
  ToyModelConfig toy;
  auto lat = magnitude_lattice(toy);
  const double lambda = toy.T * big_jump_mass(toy) / 0.5;
  auto tail = compound_tail_exact(lat, lambda, toy.M / 0.5);
  if (tail) std::printf("toy model: P(J > 1) at eps = 0.5 is %.6f\n", *tail);
  return 0;
}
