#include "coldwarm/random.hpp"

#include <numeric>
#include <stdexcept>

namespace coldwarm {

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, Rng& rng) {
    if (k > n) throw std::invalid_argument("sample size exceeds population");
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t j = 0; j < k; ++j) {
        std::uniform_int_distribution<std::size_t> pick(j, n - 1);
        std::swap(pool[j], pool[pick(rng)]);
    }
    pool.resize(k);
    return pool;
}

} // namespace coldwarm
