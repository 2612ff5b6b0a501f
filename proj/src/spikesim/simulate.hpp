#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "model.hpp"

namespace spikesim {

// Coordinate system for the Euler scheme. EulerTransformed steps the
// unit-diffusion coordinate Y = F(X), which maps the origin to -infinity and
// so keeps paths positive without clamping; it is the default. EulerNative
// steps x itself and exists as a cross-check (and to host the zero-noise
// test hook, which has no unit-diffusion coordinates).
enum class Scheme { EulerTransformed, EulerNative };

struct SimConfig {
  Scheme scheme = Scheme::EulerTransformed;
  // Step-size rule, applied on the lambda-free clock u = lambda^2 t where
  // the diffusion runs with unit speed parameters:
  //   du = min(dt_max, c_drift sigma^2 / drift^2, c_bar dist^2 / sigma^2)
  // with dist the distance to the nearest barrier in simulation coordinates
  // (sigma = 1 for the transformed scheme). Equivalent to the t-clock rule
  // dt = min(..., c_bar dist^2 / lambda^2) and lambda-equivariant, so one
  // path realization serves every lambda.
  double dt_max = 1e-3;
  double c_drift = 0.1;
  double c_bar = 0.25;
  // Brownian-bridge test for barrier crossings inside a step; reduces the
  // discretization bias of hitting decisions and of max_level.
  bool barrier_refine = true;
  std::uint64_t rng_master_seed = 0;
  // Per-sample cap; exceeding it throws StepBudgetError rather than
  // returning a biased partial answer.
  std::uint64_t step_budget = 1000000000ULL;
};

enum class HitSide { Low, High };

struct HitResult {
  HitSide which;
  double time;       // model clock
  double max_level;  // running maximum of the path in x
};

// One regeneration cycle: alpha -> beta (tau), then back to alpha (sigma).
struct CycleRecord {
  double tau;
  double sigma;
  double max_level;
  bool spike;        // max_level reached z
  bool conditioned;  // down-phase ran under the h-transform drift
};

struct SpikeTrain {
  double horizon;             // rescaled clock
  std::vector<double> times;  // rescaled spike instants, strictly increasing
  std::int64_t n_cycles = 0;  // cycles started before the horizon
};

class StepBudgetError : public std::runtime_error {
 public:
  StepBudgetError(std::uint64_t steps_taken, double elapsed, double level);
  std::uint64_t steps;  // steps consumed when the budget ran out
  double time;          // model-clock time reached
  double level;         // x position reached
};

// Reusable sampler for one (model, boundaries, z, config) tuple. Immutable
// after construction and safe to share across threads; every sample is a
// pure function of the seed, so results do not depend on how callers
// schedule the work. The free functions below are one-shot conveniences
// that build an engine per call; hot loops should hold one engine.
class CycleEngine {
 public:
  CycleEngine(const DiffusionModel& m, const CycleBoundaries& bounds,
              double z, const SimConfig& cfg);
  ~CycleEngine();
  CycleEngine(const CycleEngine&) = delete;
  CycleEngine& operator=(const CycleEngine&) = delete;

  HitResult until_hit(double x0, double low, double high,
                      std::uint64_t seed) const;
  CycleRecord cycle(std::uint64_t seed, bool conditioned) const;
  // Unconditioned down-phases from beta, retried until one reaches alpha
  // before z; equal in law to the conditioned down-phase of cycle().
  double downcross_rejection(std::uint64_t seed) const;
  SpikeTrain spike_process(double horizon, std::uint64_t seed) const;
  // First passage to z started from x, assembled from two-barrier legs and
  // cycles below alpha.
  double hitting_time_from(double x, std::uint64_t seed) const;

  double alpha() const;
  double beta() const;
  double z() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

HitResult simulate_until_hit(const DiffusionModel& m, double x0, double low,
                             double high, const SimConfig& cfg,
                             std::uint64_t seed);

CycleRecord sample_cycle(const DiffusionModel& m,
                         const CycleBoundaries& bounds, double z,
                         const SimConfig& cfg, std::uint64_t seed,
                         bool conditioned);

double sample_conditioned_downcross_rejection(const DiffusionModel& m,
                                              const CycleBoundaries& bounds,
                                              double z, const SimConfig& cfg,
                                              std::uint64_t seed);

SpikeTrain run_spike_process(const DiffusionModel& m,
                             const CycleBoundaries& bounds, double z,
                             double horizon, const SimConfig& cfg,
                             std::uint64_t seed);

double sample_hitting_time_from_x(const DiffusionModel& m, double x, double z,
                                  double floor_alpha, const SimConfig& cfg,
                                  std::uint64_t seed);

}  // namespace spikesim
