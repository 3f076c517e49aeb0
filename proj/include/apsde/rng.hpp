#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string_view>

namespace apsde {

/// Identifies the random stream construction and the Gaussian transform;
/// embedded in every serialized randomized result.
inline constexpr std::string_view kGeneratorId = "splitmix64-counter+inverse-cdf/v1";

/// Counter-based generator: the i-th output of stream `key` is a fixed
/// bijective mix of key + i * golden, so stream k of seed s is reproducible
/// without generating any other stream.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next_u64();
    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform();
    /// Standard normal by inverse CDF of uniform().
    double normal();

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Runs fn(begin, end) over [0, n) split into fixed chunks of `chunk`
/// indices, spread across hardware threads. Chunk boundaries do not depend
/// on the thread count.
void for_each_chunk(std::size_t n, std::size_t chunk,
                    const std::function<void(std::size_t, std::size_t)>& fn);

} // namespace apsde
