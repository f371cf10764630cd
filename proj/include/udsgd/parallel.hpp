#pragma once

#include <thread>
#include <vector>

namespace udsgd {

// Runs body(trial) for trial = 0..trials-1, split round-robin over up to
// `threads` workers. Each body call must touch only its own output slot;
// seeds derive from the trial index, so results do not depend on the number
// of workers. threads <= 1 runs inline.
template <class F>
void parallel_trials(int trials, int threads, F&& body) {
  if (threads <= 1 || trials <= 1) {
    for (int t = 0; t < trials; ++t) body(t);
    return;
  }
  const int workers = std::min(threads, trials);
  std::vector<std::thread> pool;
  pool.reserve(std::size_t(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&body, w, workers, trials] {
      for (int t = w; t < trials; t += workers) body(t);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace udsgd
