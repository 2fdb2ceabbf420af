#ifndef LDFA_NEIGHBORHOODS_HPP
#define LDFA_NEIGHBORHOODS_HPP

#include <algorithm>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ldfa/numerics.hpp"
#include "ldfa/thread_pool.hpp"

namespace ldfa {

struct NeighborhoodIndex {
    Index center = 0;
    std::vector<Index> members;  // center first, then neighbors by ascending distance
};

struct NeighborhoodSet {
    std::vector<NeighborhoodIndex> items;  // entry i has center i
    Index k = 0;
};

// k nearest distinct samples per column of x, brute force over Euclidean
// distances with ties broken by ascending index
inline NeighborhoodSet build_neighborhoods(const Matrix& x, Index k, unsigned threads = 1) {
    const Index n = x.cols();
    if (n == 0) {
        throw std::invalid_argument("build_neighborhoods: no samples");
    }
    if (k < 1 || k >= n) {
        throw std::invalid_argument("build_neighborhoods: k must satisfy 1 <= k <= N-1");
    }
    NeighborhoodSet set;
    set.k = k;
    set.items.resize(static_cast<std::size_t>(n));
    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t qi) {
        const Index i = static_cast<Index>(qi);
        std::vector<std::pair<double, Index>> dist;
        dist.reserve(static_cast<std::size_t>(n) - 1);
        for (Index j = 0; j < n; ++j) {
            if (j == i) {
                continue;
            }
            dist.emplace_back((x.col(i) - x.col(j)).squaredNorm(), j);
        }
        std::sort(dist.begin(), dist.end());
        NeighborhoodIndex nbr;
        nbr.center = i;
        nbr.members.reserve(static_cast<std::size_t>(k) + 1);
        nbr.members.push_back(i);
        for (Index j = 0; j < k; ++j) {
            nbr.members.push_back(dist[static_cast<std::size_t>(j)].second);
        }
        set.items[qi] = std::move(nbr);
    });
    return set;
}

// materialize the D x (k+1) block of member columns
inline Matrix gather(const Matrix& x, const NeighborhoodIndex& nbr) {
    Matrix out(x.rows(), static_cast<Index>(nbr.members.size()));
    for (std::size_t j = 0; j < nbr.members.size(); ++j) {
        Index m = nbr.members[j];
        if (m < 0 || m >= x.cols()) {
            throw std::invalid_argument("gather: member index out of range");
        }
        out.col(static_cast<Index>(j)) = x.col(m);
    }
    return out;
}

}  // namespace ldfa

#endif
