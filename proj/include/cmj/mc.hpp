#pragma once
// Deterministic block-parallel Monte Carlo driver.
//
// Work is cut into fixed-size blocks whose RNG substreams depend only on
// (seed, block index), and per-block results are reduced serially in block
// order.  Consequence: output is bit-identical for any worker count, and the
// n_threads <= 1 path is a plain loop usable as the serial reference.

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#ifdef CMJ_HAVE_OPENMP
#include <omp.h>
#endif

#include "cmj/rng.hpp"

namespace cmj::mc {

struct KahanSum {
  // No -ffast-math anywhere in this project, so the compensation survives -O3.
  double s = 0.0, c = 0.0;
  void add(double x) {
    double y = x - c;
    double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  // Merge preserving the left operand's compensation ordering.
  void merge(const KahanSum& o) {
    add(o.s);
    add(-o.c);
  }
  double value() const { return s - c; }
};

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
#ifdef CMJ_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

struct BlockRange {
  std::int64_t block;  // block index (also the RNG stream key)
  std::int64_t begin, end;  // item range [begin, end)
};

// body(BlockRange) runs once per block; blocks may run on any thread.
template <class Body>
void run_blocks(std::int64_t n_blocks, int n_threads, Body&& body,
                std::int64_t n_items, std::int64_t block_size) {
  auto range = [&](std::int64_t b) {
    std::int64_t i0 = b * block_size;
    std::int64_t i1 = i0 + block_size;
    if (i1 > n_items) i1 = n_items;
    return BlockRange{b, i0, i1};
  };
#ifdef CMJ_HAVE_OPENMP
  if (n_threads > 1) {
#pragma omp parallel for schedule(dynamic, 1) num_threads(n_threads)
    for (std::int64_t b = 0; b < n_blocks; ++b) body(range(b));
    return;
  }
#endif
  (void)n_threads;
  for (std::int64_t b = 0; b < n_blocks; ++b) body(range(b));
}

// Sum body(item, rng) over n_items items.  Per-block Kahan accumulators are
// merged in block order after the parallel region.
template <class Body>
double accumulate_items(std::int64_t n_items, std::int64_t block_size,
                        std::uint64_t seed, int n_threads, Body&& body) {
  if (n_items <= 0) return 0.0;
  if (block_size <= 0) throw std::invalid_argument("block_size must be > 0");
  std::int64_t n_blocks = (n_items + block_size - 1) / block_size;
  std::vector<KahanSum> acc(static_cast<std::size_t>(n_blocks));
  run_blocks(
      n_blocks, n_threads,
      [&](BlockRange r) {
        Rng rng(seed, static_cast<std::uint64_t>(r.block));
        KahanSum local;
        for (std::int64_t i = r.begin; i < r.end; ++i) local.add(body(i, rng));
        acc[static_cast<std::size_t>(r.block)] = local;
      },
      n_items, block_size);
  KahanSum total;
  for (const auto& a : acc) total.merge(a);
  return total.value();
}

// As above but body fills a span of k statistics per item (all Kahan-summed).
template <class Body>
std::vector<double> accumulate_stats(std::int64_t n_items,
                                     std::int64_t block_size, int k,
                                     std::uint64_t seed, int n_threads,
                                     Body&& body) {
  if (k <= 0) throw std::invalid_argument("k must be > 0");
  std::int64_t n_blocks =
      n_items > 0 ? (n_items + block_size - 1) / block_size : 0;
  std::vector<std::vector<KahanSum>> acc(static_cast<std::size_t>(n_blocks));
  run_blocks(
      n_blocks, n_threads,
      [&](BlockRange r) {
        Rng rng(seed, static_cast<std::uint64_t>(r.block));
        std::vector<KahanSum> local(static_cast<std::size_t>(k));
        std::vector<double> stat(static_cast<std::size_t>(k));
        for (std::int64_t i = r.begin; i < r.end; ++i) {
          body(i, rng, stat);
          for (int j = 0; j < k; ++j)
            local[static_cast<std::size_t>(j)].add(
                stat[static_cast<std::size_t>(j)]);
        }
        acc[static_cast<std::size_t>(r.block)] = std::move(local);
      },
      n_items, block_size);
  std::vector<double> out(static_cast<std::size_t>(k), 0.0);
  std::vector<KahanSum> total(static_cast<std::size_t>(k));
  for (const auto& blk : acc)
    for (int j = 0; j < k; ++j)
      total[static_cast<std::size_t>(j)].merge(blk[static_cast<std::size_t>(j)]);
  for (int j = 0; j < k; ++j)
    out[static_cast<std::size_t>(j)] = total[static_cast<std::size_t>(j)].value();
  return out;
}

// As accumulate_stats, but with per-block state built by make_state():
// body(i, rng, state, stat_span).
template <class MakeState, class Body>
std::vector<double> accumulate_stats_stateful(std::int64_t n_items,
                                              std::int64_t block_size, int k,
                                              std::uint64_t seed, int n_threads,
                                              MakeState&& make_state,
                                              Body&& body) {
  if (k <= 0) throw std::invalid_argument("k must be > 0");
  std::int64_t n_blocks =
      n_items > 0 ? (n_items + block_size - 1) / block_size : 0;
  std::vector<std::vector<KahanSum>> acc(static_cast<std::size_t>(n_blocks));
  run_blocks(
      n_blocks, n_threads,
      [&](BlockRange r) {
        Rng rng(seed, static_cast<std::uint64_t>(r.block));
        auto state = make_state();
        std::vector<KahanSum> local(static_cast<std::size_t>(k));
        std::vector<double> stat(static_cast<std::size_t>(k));
        for (std::int64_t i = r.begin; i < r.end; ++i) {
          body(i, rng, state, stat);
          for (int j = 0; j < k; ++j)
            local[static_cast<std::size_t>(j)].add(
                stat[static_cast<std::size_t>(j)]);
        }
        acc[static_cast<std::size_t>(r.block)] = std::move(local);
      },
      n_items, block_size);
  std::vector<double> out(static_cast<std::size_t>(k), 0.0);
  std::vector<KahanSum> total(static_cast<std::size_t>(k));
  for (const auto& blk : acc)
    for (int j = 0; j < k; ++j)
      total[static_cast<std::size_t>(j)].merge(blk[static_cast<std::size_t>(j)]);
  for (int j = 0; j < k; ++j)
    out[static_cast<std::size_t>(j)] = total[static_cast<std::size_t>(j)].value();
  return out;
}

// As accumulate_items, but with per-block state built by make_state() — the
// home for samplers with scratch buffers that must not be shared across
// blocks.  body(i, rng, state) returns the item's contribution.
template <class MakeState, class Body>
double accumulate_items_stateful(std::int64_t n_items, std::int64_t block_size,
                                 std::uint64_t seed, int n_threads,
                                 MakeState&& make_state, Body&& body) {
  if (n_items <= 0) return 0.0;
  std::int64_t n_blocks = (n_items + block_size - 1) / block_size;
  std::vector<KahanSum> acc(static_cast<std::size_t>(n_blocks));
  run_blocks(
      n_blocks, n_threads,
      [&](BlockRange r) {
        Rng rng(seed, static_cast<std::uint64_t>(r.block));
        auto state = make_state();
        KahanSum local;
        for (std::int64_t i = r.begin; i < r.end; ++i)
          local.add(body(i, rng, state));
        acc[static_cast<std::size_t>(r.block)] = local;
      },
      n_items, block_size);
  KahanSum total;
  for (const auto& a : acc) total.merge(a);
  return total.value();
}

// Collect one sample (type T) per item into a vector, in item order.
template <class T, class Body>
std::vector<T> collect_items(std::int64_t n_items, std::int64_t block_size,
                             std::uint64_t seed, int n_threads, Body&& body) {
  std::vector<T> out(static_cast<std::size_t>(n_items));
  std::int64_t n_blocks =
      n_items > 0 ? (n_items + block_size - 1) / block_size : 0;
  run_blocks(
      n_blocks, n_threads,
      [&](BlockRange r) {
        Rng rng(seed, static_cast<std::uint64_t>(r.block));
        for (std::int64_t i = r.begin; i < r.end; ++i)
          out[static_cast<std::size_t>(i)] = body(i, rng);
      },
      n_items, block_size);
  return out;
}

}  // namespace cmj::mc
