#pragma once

#include <Eigen/Core>

#include <random>
#include <vector>

#include "witten/morse_function.hpp"
#include "witten/torus_grid.hpp"

namespace witten::test {

inline MorseFunction f1() { return MorseFunction(cos_sum_spec({1, 1}, {1.0, 1.0}), 2, {1.0, 1.0}); }
inline MorseFunction f2() { return MorseFunction(cos_sum_spec({2, 1}, {1.0, 1.0}), 2, {1.0, 1.0}); }
inline MorseFunction f3() { return MorseFunction(cos_sum_spec({1, 1, 1}, {1.0, 1.0, 1.0}), 3, {1.0, 1.0, 1.0}); }

inline TorusGrid square(int N) { return build_grid(2, {1.0, 1.0}, {N, N}); }

inline Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = nd(rng);
    return v;
}

inline double max_abs(const SparseMatrix& A) {
    double m = 0.0;
    for (Eigen::Index k = 0; k < A.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(A, k); it; ++it) m = std::max(m, std::abs(it.value()));
    return m;
}

}  // namespace witten::test
