#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace irvq {

// Runs fn(begin, end) over a contiguous partition of [0, n). Callers only
// write to disjoint per-index slots, so the result never depends on how the
// range is carved up or interleaved; thread count is a speed knob, not an
// input to the math.
template <class Fn>
void parallel_for(Eigen::Index n, int threads, const Fn& fn) {
  if (n <= 0) return;
  const Eigen::Index max_threads = std::max<int>(1, threads);
  const Eigen::Index parts = std::min<Eigen::Index>(max_threads, n);
  if (parts == 1) {
    fn(Eigen::Index{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(parts));
  const Eigen::Index chunk = (n + parts - 1) / parts;
  for (Eigen::Index p = 0; p < parts; ++p) {
    const Eigen::Index begin = p * chunk;
    const Eigen::Index end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& t : pool) t.join();
}

// Like parallel_for, but the work is carved into fixed-size chunks that do
// not depend on the thread count. Kernels that are sensitive to operand
// shape (blocked matrix products) see identical chunks no matter how many
// workers run, so outputs are bit-identical for any thread count.
template <class Fn>
void parallel_blocks(Eigen::Index n, Eigen::Index chunk, int threads, const Fn& fn) {
  if (n <= 0) return;
  const Eigen::Index nchunks = (n + chunk - 1) / chunk;
  const Eigen::Index workers = std::min<Eigen::Index>(std::max(1, threads), nchunks);
  if (workers == 1) {
    for (Eigen::Index c = 0; c < nchunks; ++c)
      fn(c * chunk, std::min(n, (c + 1) * chunk));
    return;
  }
  std::atomic<Eigen::Index> next{0};
  auto run = [&] {
    for (;;) {
      const Eigen::Index c = next.fetch_add(1, std::memory_order_relaxed);
      if (c >= nchunks) return;
      fn(c * chunk, std::min(n, (c + 1) * chunk));
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  for (Eigen::Index w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
}

inline int default_threads() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

}  // namespace irvq
