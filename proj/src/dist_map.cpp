#include "pargrid/dist_map.hpp"

#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

namespace pargrid {

DistMap DistMap::col_blocks(int p)
{
    DistMap m;
    m.grid_rows = 1;
    m.grid_cols = p;
    m.dist_dim = DistDim::cols;
    m.ranks.resize(static_cast<std::size_t>(p > 0 ? p : 0));
    std::iota(m.ranks.begin(), m.ranks.end(), 0);
    m.validate();
    return m;
}

DistMap DistMap::row_blocks(int p)
{
    DistMap m;
    m.grid_rows = p;
    m.grid_cols = 1;
    m.dist_dim = DistDim::rows;
    m.ranks.resize(static_cast<std::size_t>(p > 0 ? p : 0));
    std::iota(m.ranks.begin(), m.ranks.end(), 0);
    m.validate();
    return m;
}

int DistMap::position_of(int rank) const
{
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        if (ranks[i] == rank) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

void DistMap::validate() const
{
    if (grid_rows < 1 || grid_cols < 1) {
        throw std::invalid_argument("DistMap: grid extents must be >= 1");
    }
    if (grid_rows > 1 && grid_cols > 1) {
        throw std::invalid_argument("DistMap: only 1-D processor grids are supported");
    }
    if (static_cast<std::size_t>(grid_rows) * static_cast<std::size_t>(grid_cols) != ranks.size()) {
        throw std::invalid_argument("DistMap: grid extent does not match rank list size");
    }
    std::set<int> seen;
    for (int r : ranks) {
        if (r < 0) {
            throw std::invalid_argument("DistMap: negative rank id");
        }
        if (!seen.insert(r).second) {
            throw std::invalid_argument("DistMap: duplicate rank " + std::to_string(r));
        }
    }
}

std::vector<BlockRange> block_partition(std::size_t n, int p)
{
    if (p < 1) {
        throw std::invalid_argument("block_partition: rank count must be >= 1");
    }
    const std::size_t np = static_cast<std::size_t>(p);
    const std::size_t base = n / np;
    const std::size_t rem = n % np;
    std::vector<BlockRange> out(np);
    std::size_t start = 0;
    for (std::size_t k = 0; k < np; ++k) {
        const std::size_t len = base + (k < rem ? 1 : 0);
        out[k] = BlockRange{start, len};
        start += len;
    }
    return out;
}

int owner_of(const DistMap& map, std::size_t n, std::size_t global_index)
{
    map.validate();
    if (global_index >= n) {
        throw std::out_of_range("owner_of: index " + std::to_string(global_index)
                                + " outside [0, " + std::to_string(n) + ")");
    }
    const std::size_t np = static_cast<std::size_t>(map.size());
    const std::size_t base = n / np;
    const std::size_t rem = n % np;
    // First rem positions hold base+1 items each, the rest base items.
    std::size_t pos;
    if (global_index < rem * (base + 1)) {
        pos = global_index / (base + 1);
    } else {
        pos = rem + (global_index - rem * (base + 1)) / base;
    }
    return map.ranks[pos];
}

BlockRange local_range(const DistMap& map, std::size_t n, int rank)
{
    map.validate();
    const int pos = map.position_of(rank);
    if (pos < 0) {
        throw std::invalid_argument("local_range: rank " + std::to_string(rank)
                                    + " is not part of the map");
    }
    return block_partition(n, map.size())[static_cast<std::size_t>(pos)];
}

} // namespace pargrid
