#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace kfat {

/// Worker count: KFAT_THREADS if set and positive, otherwise the hardware
/// concurrency (at least 1).
std::size_t thread_count();

/// Calls body(i) for i in [0, n). Indices are split into contiguous blocks,
/// one per worker; the first exception thrown is rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for an independent stream keyed by (base, index).
constexpr std::uint64_t stream_seed(std::uint64_t base, std::uint64_t index) {
  return mix64(mix64(base) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

}  // namespace kfat
