#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rosae/error.hpp"

namespace rosae {

/// Dense row-major matrix of doubles.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), values(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

    double* row(std::size_t r) { return values.data() + r * cols; }
    const double* row(std::size_t r) const { return values.data() + r * cols; }

    std::span<double> row_span(std::size_t r) { return {row(r), cols}; }
    std::span<const double> row_span(std::size_t r) const { return {row(r), cols}; }

    bool empty() const { return rows == 0 || cols == 0; }

    void fill(double v) { std::fill(values.begin(), values.end(), v); }
};

inline bool all_finite(std::span<const double> xs) {
    for (double x : xs) {
        if (!std::isfinite(x)) {
            return false;
        }
    }
    return true;
}

/// Throws InvalidData when the matrix holds NaN or infinite entries.
inline void require_finite(const DenseMatrix& m, const std::string& what) {
    if (!all_finite(m.values)) {
        throw InvalidData(what + ": non-finite entries");
    }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double frobenius_norm(const DenseMatrix& m) { return norm2(m.values); }

// ---------------------------------------------------------------------------
// Small GEMM kernels over raw row-major buffers. Loop orders are chosen so the
// innermost loop runs over contiguous memory and auto-vectorizes.
// ---------------------------------------------------------------------------

/// C (n x p) += alpha * A (n x m) * B (m x p)
inline void gemm_nn(double* C, const double* A, const double* B, std::size_t n,
                    std::size_t m, std::size_t p, double alpha = 1.0) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* a = A + i * m;
        double* c = C + i * p;
        for (std::size_t k = 0; k < m; ++k) {
            const double aik = alpha * a[k];
            const double* b = B + k * p;
            for (std::size_t j = 0; j < p; ++j) {
                c[j] += aik * b[j];
            }
        }
    }
}

/// C (n x p) += alpha * A (n x m) * B^T, where B is stored (p x m)
inline void gemm_nt(double* C, const double* A, const double* B, std::size_t n,
                    std::size_t m, std::size_t p, double alpha = 1.0) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* a = A + i * m;
        double* c = C + i * p;
        for (std::size_t j = 0; j < p; ++j) {
            const double* b = B + j * m;
            double s = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                s += a[k] * b[k];
            }
            c[j] += alpha * s;
        }
    }
}

/// C (m x p) += alpha * A^T * B, where A is stored (n x m) and B (n x p)
inline void gemm_tn(double* C, const double* A, const double* B, std::size_t n,
                    std::size_t m, std::size_t p, double alpha = 1.0) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* a = A + i * m;
        const double* b = B + i * p;
        for (std::size_t k = 0; k < m; ++k) {
            const double aik = alpha * a[k];
            double* c = C + k * p;
            for (std::size_t j = 0; j < p; ++j) {
                c[j] += aik * b[j];
            }
        }
    }
}

/// Solves system * y = rhs for a symmetric positive definite system via
/// Cholesky factorization. The system must be square and symmetric to within
/// a small tolerance; an indefinite or singular system raises NumericFailure.
inline std::vector<double> solve_spd(const DenseMatrix& system, std::span<const double> rhs) {
    const std::size_t n = system.rows;
    if (system.cols != n || rhs.size() != n) {
        throw InvalidArgument("solve_spd: system must be square and match rhs length");
    }
    double max_abs = 1.0;
    for (double v : system.values) {
        max_abs = std::max(max_abs, std::abs(v));
    }
    const double sym_tol = 1e-9 * max_abs;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (std::abs(system.at(i, j) - system.at(j, i)) > sym_tol) {
                throw InvalidArgument("solve_spd: system is not symmetric");
            }
        }
    }

    // Lower-triangular Cholesky factor, in place on a copy.
    DenseMatrix L = system;
    for (std::size_t j = 0; j < n; ++j) {
        double diag = L.at(j, j);
        for (std::size_t k = 0; k < j; ++k) {
            diag -= L.at(j, k) * L.at(j, k);
        }
        if (!(diag > 0.0) || !std::isfinite(diag)) {
            throw NumericFailure("solve_spd: system is not positive definite");
        }
        const double ljj = std::sqrt(diag);
        L.at(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = L.at(i, j);
            for (std::size_t k = 0; k < j; ++k) {
                s -= L.at(i, k) * L.at(j, k);
            }
            L.at(i, j) = s / ljj;
        }
    }

    // L * t = rhs, then L^T * y = t.
    std::vector<double> y(rhs.begin(), rhs.end());
    for (std::size_t i = 0; i < n; ++i) {
        double s = y[i];
        for (std::size_t k = 0; k < i; ++k) {
            s -= L.at(i, k) * y[k];
        }
        y[i] = s / L.at(i, i);
    }
    for (std::size_t ii = n; ii > 0; --ii) {
        const std::size_t i = ii - 1;
        double s = y[i];
        for (std::size_t k = i + 1; k < n; ++k) {
            s -= L.at(k, i) * y[k];
        }
        y[i] = s / L.at(i, i);
    }
    return y;
}

} // namespace rosae
