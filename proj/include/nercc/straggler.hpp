#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "nercc/codec.hpp"
#include "nercc/models.hpp"
#include "nercc/nodes.hpp"
#include "nercc/types.hpp"

namespace nercc {

enum class StragglerMode { FixedCount, DelayDeadline, ExplicitList };

struct StragglerConfig {
  StragglerMode mode = StragglerMode::FixedCount;
  std::size_t num_stragglers = 0;            // fixed-count
  double base_delay = 0.0;                   // t0
  double mean_extra = 1.0;                   // mean of the exponential extra delay
  double deadline = 1.0;                     // delay-deadline
  std::vector<std::size_t> straggler_indices;  // explicit-list, 0-based

  static StragglerConfig fixed_count(std::size_t count);
  static StragglerConfig delay_deadline(double base_delay, double mean_extra, double deadline);
  static StragglerConfig explicit_list(std::vector<std::size_t> indices);

  /// Throws ConfigInvalid / CountOutOfRange / IndexOutOfRange for bad settings.
  void validate(std::size_t num_workers) const;
};

struct RoundOutcome {
  CodedBatch coded;
  std::vector<double> arrivals;  // +inf for erased workers in fixed-count / explicit-list
  SurvivorResults survivors;
  std::uint64_t seed = 0;
};

struct RoundResult {
  RoundOutcome outcome;
  Matrix decoded;  // K x m
};

/// Uniform subset of size n - num_stragglers of [0, n), ascending; a pure
/// function of the seed.
std::vector<std::size_t> sample_survivors(std::size_t n, std::size_t num_stragglers,
                                          std::uint64_t seed);

/// Arrival time of worker `index`: t0 + Exp(mean) from the worker's own stream.
double worker_arrival(const StragglerConfig& cfg, std::uint64_t seed, std::size_t index);

/// Survivor set and arrival times for one round.
std::vector<std::size_t> select_survivors(const StragglerConfig& cfg, std::size_t num_workers,
                                          std::uint64_t seed, std::vector<double>& arrivals);

/// Evaluates the model on every coded row, spreading rows over up to
/// `threads` workers (0 = hardware concurrency). Output is independent of the
/// thread count.
Matrix run_workers(const ComputeModel& model, const Matrix& coded, unsigned threads = 0);

/// Encode, compute, select survivors, decode. Throws DecodingInfeasible when
/// fewer than min_survivors(cfg) workers respond.
RoundResult run_round(const Matrix& data, const ComputeModel& model, const NodeSet& alphas,
                      const NodeSet& betas, const SchemeConfig& cfg,
                      const StragglerConfig& straggler, std::uint64_t seed, unsigned threads = 0);

}  // namespace nercc
