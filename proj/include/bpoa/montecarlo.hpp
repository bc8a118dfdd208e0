#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace bpoa::mc {

// Samples per chunk. Each chunk draws from its own generator seeded from
// (master seed, chunk index) and chunks are reduced in index order, so an
// estimate does not depend on how chunks are spread over threads.
inline constexpr std::uint64_t kChunkSize = 4096;

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t chunk_seed(std::uint64_t seed, std::uint64_t chunk);
// Uniform on [0, 1) from the top 53 bits.
double uniform01(std::mt19937_64& rng);

// Running sums of several per-sample statistics.
struct Moments {
  explicit Moments(std::size_t width = 0) : sum(width, 0.0), sum_sq(width, 0.0) {}

  void add(std::size_t j, double x) {
    sum[j] += x;
    sum_sq[j] += x * x;
  }
  void merge(const Moments& other);
  double mean(std::size_t j) const;
  double std_error(std::size_t j) const;

  std::vector<double> sum;
  std::vector<double> sum_sq;
  std::uint64_t count = 0;
};

using ChunkBody = std::function<void(std::mt19937_64& rng, std::uint64_t n, Moments& out)>;

// Runs `body` over ceil(samples / kChunkSize) chunks. The body must call
// Moments::add for each of its n samples; run_chunked sets the counts.
Moments run_chunked(std::uint64_t samples, std::uint64_t seed, unsigned workers,
                    std::size_t width, const ChunkBody& body);

// 0 means one worker per hardware thread.
unsigned resolve_workers(unsigned requested);

// Calls fn(i) for i in [0, n) on up to `workers` threads.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

// Finite distribution sampled by inverse CDF.
class Categorical {
 public:
  explicit Categorical(std::span<const double> weights);
  std::size_t operator()(std::mt19937_64& rng) const;

 private:
  std::vector<double> cumulative_;
};

}  // namespace bpoa::mc
