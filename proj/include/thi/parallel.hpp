#ifndef THI_PARALLEL_HPP
#define THI_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace thi {

/// Worker count for batch evaluation: THI_NUM_THREADS if set, else the
/// hardware concurrency.
inline std::size_t evaluation_threads()
{
  if (const char* env = std::getenv("THI_NUM_THREADS")) {
    try {
      const long n = std::stol(env);
      if (n >= 1)
        return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
    }
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Run fn(begin, end) over contiguous chunks of [0, n). Results must be
/// written to disjoint slots; the first exception is rethrown.
template <typename Fn>
void parallel_chunks(std::size_t n, Fn&& fn, std::size_t threads = evaluation_threads())
{
  threads = std::min(threads, std::max<std::size_t>(1, n / 16));
  if (threads <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t w = 0; w < threads; ++w) {
    const std::size_t b = w * chunk;
    const std::size_t e = std::min(n, b + chunk);
    pool.emplace_back([&, w, b, e] {
      try {
        if (b < e)
          fn(b, e);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool)
    t.join();
  for (auto& err : errors)
    if (err)
      std::rethrow_exception(err);
}

} // namespace thi

#endif // THI_PARALLEL_HPP
