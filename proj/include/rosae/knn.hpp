#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "rosae/error.hpp"
#include "rosae/matrix.hpp"

namespace rosae {

/// The k nearest neighbours of one row, sorted by ascending distance.
/// The centre row itself is excluded; equal distances are broken by the
/// lower row index so results are reproducible.
struct NeighbourSet {
    std::size_t center_index = 0;
    std::vector<std::size_t> neighbour_indices;
    std::vector<double> distances;

    std::size_t k() const { return neighbour_indices.size(); }
};

/// Exhaustive Euclidean k-nearest-neighbour search over matrix rows.
inline NeighbourSet knn_search(const DenseMatrix& data, std::size_t query_index, std::size_t k) {
    const std::size_t n = data.rows;
    if (query_index >= n) {
        throw InvalidArgument("knn_search: query_index out of range");
    }
    if (k < 1 || k >= n) {
        throw InvalidArgument("knn_search: k must satisfy 1 <= k <= N-1");
    }
    require_finite(data, "knn_search");

    std::vector<std::pair<double, std::size_t>> order;
    order.reserve(n - 1);
    const auto query = data.row_span(query_index);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == query_index) {
            continue;
        }
        order.emplace_back(squared_distance(query, data.row_span(i)), i);
    }
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end());

    NeighbourSet out;
    out.center_index = query_index;
    out.neighbour_indices.reserve(k);
    out.distances.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        out.neighbour_indices.push_back(order[i].second);
        out.distances.push_back(std::sqrt(order[i].first));
    }
    return out;
}

} // namespace rosae
