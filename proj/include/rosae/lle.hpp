#pragma once

#include <cstddef>
#include <vector>

#include "rosae/error.hpp"
#include "rosae/knn.hpp"
#include "rosae/matrix.hpp"

namespace rosae {

/// Reconstruction weights of one row over its neighbours. Weights always
/// sum to one; individual weights may be negative.
struct LocalWeights {
    std::size_t center_index = 0;
    std::vector<std::size_t> neighbour_indices;
    std::vector<double> weights;
};

/// Default Tikhonov factor for the local Gram system, relative to its trace.
inline constexpr double kDefaultLleRegularization = 1e-3;

/// Solves for the weights w minimizing ||x_c - sum_j w_j x_j||^2 subject to
/// sum_j w_j = 1, via the centred Gram system C w = 1. A Tikhonov term
/// reg * trace(C) * I is added to C before solving; the result is normalized
/// to sum exactly to one. A singular Gram system (reg too small for
/// degenerate neighbourhoods) raises NumericFailure; the caller should retry
/// with a larger reg.
inline LocalWeights lle_weights(const DenseMatrix& data, const NeighbourSet& neighbours,
                                double reg = kDefaultLleRegularization) {
    if (reg < 0.0) {
        throw InvalidArgument("lle_weights: reg must be non-negative");
    }
    const std::size_t k = neighbours.k();
    const std::size_t n = data.rows;
    if (k == 0) {
        throw InvalidArgument("lle_weights: neighbour set is empty");
    }
    if (neighbours.center_index >= n) {
        throw InvalidArgument("lle_weights: center index out of range");
    }
    for (std::size_t j : neighbours.neighbour_indices) {
        if (j >= n || j == neighbours.center_index) {
            throw InvalidArgument("lle_weights: invalid neighbour index");
        }
    }

    const auto center = data.row_span(neighbours.center_index);
    const std::size_t dim = data.cols;

    // Centred neighbour differences d_j = x_j - x_c.
    DenseMatrix diffs(k, dim);
    for (std::size_t j = 0; j < k; ++j) {
        const double* xj = data.row(neighbours.neighbour_indices[j]);
        double* dj = diffs.row(j);
        for (std::size_t c = 0; c < dim; ++c) {
            dj[c] = xj[c] - center[c];
        }
    }

    DenseMatrix gram(k, k);
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a; b < k; ++b) {
            const double g = dot(diffs.row_span(a), diffs.row_span(b));
            gram.at(a, b) = g;
            gram.at(b, a) = g;
        }
    }
    double trace = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
        trace += gram.at(a, a);
    }
    if (reg > 0.0) {
        const double shift = reg * trace;
        for (std::size_t a = 0; a < k; ++a) {
            gram.at(a, a) += shift;
        }
    }

    std::vector<double> ones(k, 1.0);
    std::vector<double> raw;
    try {
        raw = solve_spd(gram, ones);
    } catch (const NumericFailure&) {
        throw NumericFailure("lle_weights: singular local Gram system; raise reg");
    }

    double sum = 0.0;
    for (double w : raw) {
        sum += w;
    }
    if (sum == 0.0 || !std::isfinite(sum)) {
        throw NumericFailure("lle_weights: degenerate weight normalization; raise reg");
    }
    for (double& w : raw) {
        w /= sum;
    }

    LocalWeights out;
    out.center_index = neighbours.center_index;
    out.neighbour_indices = neighbours.neighbour_indices;
    out.weights = std::move(raw);
    return out;
}

} // namespace rosae
