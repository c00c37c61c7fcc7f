#pragma once

#include <boost/multiprecision/mpfr.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <mutex>
#include <utility>
#include <vector>

#include "witten/errors.hpp"

namespace witten {

using mp_real = boost::multiprecision::mpfr_float;

namespace detail {
inline std::recursive_mutex& precision_mutex() {
    static std::recursive_mutex m;
    return m;
}
}  // namespace detail

// Sets the default mpfr precision (decimal digits) for the current scope. The default is
// process-wide, so multiprecision scopes are serialized across threads.
class ScopedPrecision {
public:
    explicit ScopedPrecision(unsigned digits) : lock_(detail::precision_mutex()), saved_(mp_real::default_precision()) {
        mp_real::default_precision(digits);
    }
    ~ScopedPrecision() { mp_real::default_precision(saved_); }
    ScopedPrecision(const ScopedPrecision&) = delete;
    ScopedPrecision& operator=(const ScopedPrecision&) = delete;

private:
    std::unique_lock<std::recursive_mutex> lock_;
    unsigned saved_;
};

// Row-major dense matrix of mp_real.
struct MpMatrix {
    std::size_t rows = 0, cols = 0;
    std::vector<mp_real> a;

    MpMatrix() = default;
    MpMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, mp_real(0)) {}

    mp_real& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    const mp_real& operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    static MpMatrix identity(std::size_t n) {
        MpMatrix I(n, n);
        for (std::size_t i = 0; i < n; ++i) I(i, i) = 1;
        return I;
    }
};

inline MpMatrix mp_multiply(const MpMatrix& A, const MpMatrix& B) {
    if (A.cols != B.rows) throw DomainError("mp_multiply shape mismatch");
    MpMatrix C(A.rows, B.cols);
    for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t k = 0; k < A.cols; ++k) {
            if (A(i, k) == 0) continue;
            for (std::size_t j = 0; j < B.cols; ++j) C(i, j) += A(i, k) * B(k, j);
        }
    return C;
}

inline MpMatrix mp_transpose(const MpMatrix& A) {
    MpMatrix T(A.cols, A.rows);
    for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t j = 0; j < A.cols; ++j) T(j, i) = A(i, j);
    return T;
}

// Lower Cholesky factor of an SPD matrix.
inline MpMatrix mp_cholesky(const MpMatrix& A) {
    const std::size_t n = A.rows;
    MpMatrix L(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        mp_real s = A(j, j);
        for (std::size_t k = 0; k < j; ++k) s -= L(j, k) * L(j, k);
        if (s <= 0) throw NumericalError("multiprecision Cholesky: matrix not positive definite");
        L(j, j) = sqrt(s);
        for (std::size_t i = j + 1; i < n; ++i) {
            mp_real v = A(i, j);
            for (std::size_t k = 0; k < j; ++k) v -= L(i, k) * L(j, k);
            L(i, j) = v / L(j, j);
        }
    }
    return L;
}

// L^{-1} A L^{-T} for lower-triangular L.
inline MpMatrix mp_congruence_inverse(const MpMatrix& L, const MpMatrix& A) {
    const std::size_t n = L.rows;
    MpMatrix X(n, n);  // X = L^{-1} A
    for (std::size_t c = 0; c < n; ++c)
        for (std::size_t i = 0; i < n; ++i) {
            mp_real v = A(i, c);
            for (std::size_t k = 0; k < i; ++k) v -= L(i, k) * X(k, c);
            X(i, c) = v / L(i, i);
        }
    MpMatrix Y(n, n);  // Y = X L^{-T}, i.e. Y^T = L^{-1} X^T
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t i = 0; i < n; ++i) {
            mp_real v = X(r, i);
            for (std::size_t k = 0; k < i; ++k) v -= L(i, k) * Y(r, k);
            Y(r, i) = v / L(i, i);
        }
    return Y;
}

struct MpEigen {
    std::vector<mp_real> values;  // ascending
    MpMatrix vectors;             // columns
};

// Cyclic Jacobi for a symmetric matrix.
inline MpEigen mp_jacobi_eigen(MpMatrix A) {
    const std::size_t n = A.rows;
    MpMatrix V = MpMatrix::identity(n);
    mp_real norm = 0;
    for (const auto& x : A.a) norm += x * x;
    norm = sqrt(norm);
    const mp_real eps = std::numeric_limits<mp_real>::epsilon();
    for (int sweep = 0; sweep < 100; ++sweep) {
        mp_real off = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += A(i, j) * A(i, j);
        if (sqrt(off) <= eps * norm || off == 0) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (A(p, q) == 0) continue;
                const mp_real theta = (A(q, q) - A(p, p)) / (2 * A(p, q));
                mp_real t = 1 / (abs(theta) + sqrt(theta * theta + 1));
                if (theta < 0) t = -t;
                const mp_real c = 1 / sqrt(t * t + 1);
                const mp_real s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const mp_real akp = A(k, p), akq = A(k, q);
                    A(k, p) = c * akp - s * akq;
                    A(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const mp_real apk = A(p, k), aqk = A(q, k);
                    A(p, k) = c * apk - s * aqk;
                    A(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const mp_real vkp = V(k, p), vkq = V(k, q);
                    V(k, p) = c * vkp - s * vkq;
                    V(k, q) = s * vkp + c * vkq;
                }
            }
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return A(x, x) < A(y, y); });
    MpEigen out;
    out.vectors = MpMatrix(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        out.values.push_back(A(order[c], order[c]));
        for (std::size_t k = 0; k < n; ++k) out.vectors(k, c) = V(k, order[c]);
    }
    return out;
}

// Eigenvalues of the pencil (A, B), B SPD, ascending.
inline std::vector<mp_real> mp_generalized_eigenvalues(const MpMatrix& A, const MpMatrix& B) {
    const MpMatrix L = mp_cholesky(B);
    return mp_jacobi_eigen(mp_congruence_inverse(L, A)).values;
}

}  // namespace witten
