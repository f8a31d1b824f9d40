#include "nercc/straggler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <thread>
#include <utility>

#include "nercc/error.hpp"
#include "nercc/random.hpp"

namespace nercc {

namespace {

constexpr std::uint64_t kSurvivorStream = 0x5355525649564F52ULL;  // "SURVIVOR"

}  // namespace

StragglerConfig StragglerConfig::fixed_count(std::size_t count) {
  StragglerConfig c;
  c.mode = StragglerMode::FixedCount;
  c.num_stragglers = count;
  return c;
}

StragglerConfig StragglerConfig::delay_deadline(double base_delay, double mean_extra,
                                                double deadline) {
  StragglerConfig c;
  c.mode = StragglerMode::DelayDeadline;
  c.base_delay = base_delay;
  c.mean_extra = mean_extra;
  c.deadline = deadline;
  return c;
}

StragglerConfig StragglerConfig::explicit_list(std::vector<std::size_t> indices) {
  StragglerConfig c;
  c.mode = StragglerMode::ExplicitList;
  c.straggler_indices = std::move(indices);
  return c;
}

void StragglerConfig::validate(std::size_t num_workers) const {
  if (!(base_delay >= 0.0) || !(mean_extra > 0.0) || !std::isfinite(base_delay) ||
      !std::isfinite(mean_extra)) {
    throw Error(ErrorCode::ConfigInvalid, "delay model needs t0 >= 0 and mean > 0");
  }
  switch (mode) {
    case StragglerMode::FixedCount:
      if (num_stragglers >= num_workers) {
        throw Error(ErrorCode::CountOutOfRange,
                    std::to_string(num_stragglers) + " stragglers with only " +
                        std::to_string(num_workers) + " workers");
      }
      break;
    case StragglerMode::DelayDeadline:
      if (!(deadline >= base_delay)) {
        throw Error(ErrorCode::ConfigInvalid, "deadline must be >= base delay");
      }
      break;
    case StragglerMode::ExplicitList:
      for (auto i : straggler_indices) {
        if (i >= num_workers) {
          throw Error(ErrorCode::IndexOutOfRange,
                      "straggler index " + std::to_string(i) + " out of range");
        }
      }
      break;
  }
}

std::vector<std::size_t> sample_survivors(std::size_t n, std::size_t num_stragglers,
                                          std::uint64_t seed) {
  if (num_stragglers >= n) {
    throw Error(ErrorCode::CountOutOfRange, std::to_string(num_stragglers) +
                                                " stragglers with only " + std::to_string(n) +
                                                " workers");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  // Partial Fisher-Yates: the first num_stragglers slots become the erasures.
  Rng rng(derive_seed(seed, kSurvivorStream));
  for (std::size_t i = 0; i < num_stragglers; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(perm[i], perm[j]);
  }
  std::vector<std::size_t> survivors(perm.begin() + static_cast<std::ptrdiff_t>(num_stragglers),
                                     perm.end());
  std::sort(survivors.begin(), survivors.end());
  return survivors;
}

double worker_arrival(const StragglerConfig& cfg, std::uint64_t seed, std::size_t index) {
  Rng rng(derive_seed(seed, index));
  return cfg.base_delay + rng.exponential(cfg.mean_extra);
}

std::vector<std::size_t> select_survivors(const StragglerConfig& cfg, std::size_t num_workers,
                                          std::uint64_t seed, std::vector<double>& arrivals) {
  cfg.validate(num_workers);
  arrivals.resize(num_workers);
  for (std::size_t i = 0; i < num_workers; ++i) arrivals[i] = worker_arrival(cfg, seed, i);

  constexpr double kNever = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> survivors;
  switch (cfg.mode) {
    case StragglerMode::FixedCount: {
      survivors = sample_survivors(num_workers, cfg.num_stragglers, seed);
      std::vector<bool> alive(num_workers, false);
      for (auto i : survivors) alive[i] = true;
      for (std::size_t i = 0; i < num_workers; ++i) {
        if (!alive[i]) arrivals[i] = kNever;
      }
      break;
    }
    case StragglerMode::DelayDeadline:
      for (std::size_t i = 0; i < num_workers; ++i) {
        if (arrivals[i] <= cfg.deadline) survivors.push_back(i);
      }
      break;
    case StragglerMode::ExplicitList: {
      std::vector<bool> alive(num_workers, true);
      for (auto i : cfg.straggler_indices) alive[i] = false;
      for (std::size_t i = 0; i < num_workers; ++i) {
        if (alive[i]) {
          survivors.push_back(i);
        } else {
          arrivals[i] = kNever;
        }
      }
      break;
    }
  }
  return survivors;
}

Matrix run_workers(const ComputeModel& model, const Matrix& coded, unsigned threads) {
  const auto rows = coded.rows();
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<Eigen::Index>(threads, std::max<Eigen::Index>(rows, 1)));
  if (threads <= 1) return model.apply(coded);

  Matrix out(rows, model.output_dim());
  std::vector<std::jthread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const Eigen::Index chunk = (rows + threads - 1) / threads;
  for (unsigned w = 0; w < threads; ++w) {
    const Eigen::Index begin = w * chunk;
    const Eigen::Index count = std::min(chunk, rows - begin);
    if (count <= 0) break;
    pool.emplace_back([&, w, begin, count] {
      try {
        out.middleRows(begin, count) = model.apply(coded.middleRows(begin, count));
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  pool.clear();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

RoundResult run_round(const Matrix& data, const ComputeModel& model, const NodeSet& alphas,
                      const NodeSet& betas, const SchemeConfig& cfg,
                      const StragglerConfig& straggler, std::uint64_t seed, unsigned threads) {
  RoundResult result{RoundOutcome{encode(data, alphas, betas, cfg), {}, {}, seed}, Matrix{}};
  auto& outcome = result.outcome;
  const Matrix worker_out = run_workers(model, outcome.coded.coded, threads);

  const auto survivors = select_survivors(straggler, betas.size(), seed, outcome.arrivals);
  Matrix picked(static_cast<Eigen::Index>(survivors.size()), worker_out.cols());
  for (std::size_t r = 0; r < survivors.size(); ++r) {
    picked.row(static_cast<Eigen::Index>(r)) = worker_out.row(static_cast<Eigen::Index>(survivors[r]));
  }
  outcome.survivors = SurvivorResults{survivors, std::move(picked)};
  result.decoded = decode(outcome.survivors, betas, alphas, cfg);
  return result;
}

}  // namespace nercc
