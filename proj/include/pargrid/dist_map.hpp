#pragma once

#include <cstddef>
#include <vector>

namespace pargrid {

/// Which dimension of a matrix is split across ranks. Only 1-D processor
/// grids are supported: a map distributes rows or columns, never both.
enum class DistDim { rows, cols };

/// Half-open slice [start, start + len) of a 0-based global index range.
/// A range of start=25, len=25 corresponds to 1-based positions 26..50.
struct BlockRange {
    std::size_t start = 0;
    std::size_t len = 0;

    std::size_t end() const { return start + len; }
    bool contains(std::size_t g) const { return g >= start && g < end(); }
    bool empty() const { return len == 0; }

    friend bool operator==(const BlockRange&, const BlockRange&) = default;
};

/// Block-distribution descriptor: a 1-D processor grid, the distributed
/// dimension, and the ordered list of participating ranks.
struct DistMap {
    int grid_rows = 1;
    int grid_cols = 1;
    DistDim dist_dim = DistDim::cols;
    std::vector<int> ranks;

    /// Grid [1 p]: columns split into contiguous blocks over ranks 0..p-1.
    static DistMap col_blocks(int p);
    /// Grid [p 1]: rows split into contiguous blocks over ranks 0..p-1.
    static DistMap row_blocks(int p);

    int size() const { return static_cast<int>(ranks.size()); }
    /// Position of `rank` in the rank list, -1 if absent.
    int position_of(int rank) const;
    /// Throws if the grid is not 1-D, its extent disagrees with the rank
    /// list, or the rank list contains duplicates / negative ids.
    void validate() const;

    friend bool operator==(const DistMap&, const DistMap&) = default;
};

/// Splits n items over p ranks into contiguous disjoint ranges covering
/// [0, n) exactly. With r = n mod p, the first r ranks receive ceil(n/p)
/// items and the rest floor(n/p); ranges may be empty when n < p.
std::vector<BlockRange> block_partition(std::size_t n, int p);

/// Rank owning `global_index` under the map, consistent with block_partition.
int owner_of(const DistMap& map, std::size_t n, std::size_t global_index);

/// The range owned by `rank`: block_partition(n, p) at the rank's position
/// in the map's rank list.
BlockRange local_range(const DistMap& map, std::size_t n, int rank);

} // namespace pargrid
