#include "bpoa/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace bpoa::mc {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t chunk_seed(std::uint64_t seed, std::uint64_t chunk) {
  return splitmix64(splitmix64(seed) ^ splitmix64(chunk + 0x632be59bd9b4e019ULL));
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void Moments::merge(const Moments& other) {
  for (std::size_t j = 0; j < sum.size(); ++j) {
    sum[j] += other.sum[j];
    sum_sq[j] += other.sum_sq[j];
  }
  count += other.count;
}

double Moments::mean(std::size_t j) const {
  return count == 0 ? 0.0 : sum[j] / static_cast<double>(count);
}

double Moments::std_error(std::size_t j) const {
  if (count < 2) return 0.0;
  const double n = static_cast<double>(count);
  const double m = sum[j] / n;
  const double var = std::max(0.0, (sum_sq[j] - n * m * m) / (n - 1.0));
  return std::sqrt(var / n);
}

unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t threads = std::min<std::size_t>(resolve_workers(workers), n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto loop = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(loop);
  loop();
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

Moments run_chunked(std::uint64_t samples, std::uint64_t seed, unsigned workers,
                    std::size_t width, const ChunkBody& body) {
  const std::uint64_t chunks = (samples + kChunkSize - 1) / kChunkSize;
  std::vector<Moments> partial(chunks, Moments(width));
  parallel_for(chunks, workers, [&](std::size_t c) {
    const std::uint64_t n = std::min<std::uint64_t>(kChunkSize, samples - c * kChunkSize);
    std::mt19937_64 rng(chunk_seed(seed, c));
    body(rng, n, partial[c]);
    partial[c].count = n;
  });
  Moments total(width);
  for (const Moments& m : partial) total.merge(m);
  return total;
}

Categorical::Categorical(std::span<const double> weights) {
  double acc = 0.0;
  for (double w : weights) {
    acc += w;
    cumulative_.push_back(acc);
  }
  for (double& c : cumulative_) c /= acc;
  cumulative_.back() = 1.0;
}

std::size_t Categorical::operator()(std::mt19937_64& rng) const {
  const double u = uniform01(rng);
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()),
                               cumulative_.size() - 1);
}

}  // namespace bpoa::mc
