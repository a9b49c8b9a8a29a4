#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace pcsim::cli {

inline unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Runs fn(i) for i in [0, n) on up to `threads` workers and returns the
/// results in index order, so the output does not depend on scheduling. The
/// exception of the lowest failing index is rethrown after all workers stop.
template <class R>
std::vector<R> run_indexed(std::size_t n, unsigned threads, const std::function<R(std::size_t)>& fn,
                           const std::function<void(std::size_t)>& on_done = {}) {
  std::vector<R> out(n);
  std::vector<std::exception_ptr> errs(n);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex done_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n || stop.load()) return;
      try {
        out[i] = fn(i);
      } catch (...) {
        errs[i] = std::current_exception();
        stop = true;
        return;
      }
      if (on_done) {
        std::lock_guard<std::mutex> lk(done_mu);
        on_done(i);
      }
    }
  };
  const unsigned nt = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), std::max<std::size_t>(n, 1)));
  if (nt <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace pcsim::cli
