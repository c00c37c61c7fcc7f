#pragma once

#include <Eigen/Dense>

#include <vector>

#include "witten/combinatorics.hpp"
#include "witten/errors.hpp"

namespace witten {

// sign * dx_J' or zero (sign == 0).
struct FormTerm {
    int sign = 0;
    AxisSet axes = 0;
};

// dx_l ^ dx_J
inline FormTerm wedge(int l, AxisSet J) {
    if (contains(J, l)) return {};
    return {(position_of(J, l) % 2 == 0) ? 1 : -1, J | (AxisSet{1} << l)};
}

// dx_k _| dx_J  (interior product with the dual vector of dx_k)
inline FormTerm contract(int k, AxisSet J) {
    if (!contains(J, k)) return {};
    return {(position_of(J, k) % 2 == 0) ? 1 : -1, J & ~(AxisSet{1} << k)};
}

// Coefficient of dx_J' in [dx_l ^, dx_k _|] dx_J = dx_l ^ (dx_k _| dx_J) - dx_k _| (dx_l ^ dx_J).
// For l == k this is +1 if k in J and -1 otherwise (J' = J). For l != k both products are
// nonzero exactly when k in J and l not in J, and they add, so the value is +-2.
inline int hessian_coupling_coefficient(AxisSet J, AxisSet Jp, int l, int k) {
    if (cardinality(J) != cardinality(Jp)) throw DomainError("coupling needs |J| == |J'|");
    int coef = 0;
    const FormTerm a = contract(k, J);
    if (a.sign != 0) {
        const FormTerm b = wedge(l, a.axes);
        if (b.sign != 0 && b.axes == Jp) coef += a.sign * b.sign;
    }
    const FormTerm c = wedge(l, J);
    if (c.sign != 0) {
        const FormTerm e = contract(k, c.axes);
        if (e.sign != 0 && e.axes == Jp) coef -= c.sign * e.sign;
    }
    return coef;
}

// Matrix of sum_{l,k} H_lk [dx_l ^, dx_k _|] on the q-forms, rows/cols in axis_subsets(n, q) order.
template <class Mat>
Eigen::MatrixXd hessian_coupling_block(const Mat& H, int n, int q) {
    const auto sets = axis_subsets(n, q);
    const auto C = static_cast<Eigen::Index>(sets.size());
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(C, C);
    for (Eigen::Index a = 0; a < C; ++a)
        for (Eigen::Index b = 0; b < C; ++b)
            for (int l = 0; l < n; ++l)
                for (int k = 0; k < n; ++k) {
                    const int c = hessian_coupling_coefficient(sets[static_cast<std::size_t>(b)],
                                                               sets[static_cast<std::size_t>(a)], l, k);
                    if (c != 0) B(a, b) += H(l, k) * c;
                }
    return B;
}

// Matrix of (v ^)(v _|) + (v _|)(v ^) on q-forms for a covector v, composed term by term.
inline Eigen::MatrixXd anticommutator_block(const std::vector<double>& v, int q) {
    const int n = static_cast<int>(v.size());
    const auto sets = axis_subsets(n, q);
    const auto C = static_cast<Eigen::Index>(sets.size());
    auto row = [&](AxisSet J) {
        for (std::size_t i = 0; i < sets.size(); ++i)
            if (sets[i] == J) return static_cast<Eigen::Index>(i);
        throw DomainError("form degree changed");
    };
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(C, C);
    for (Eigen::Index b = 0; b < C; ++b) {
        const AxisSet J = sets[static_cast<std::size_t>(b)];
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double w = v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(j)];
                const FormTerm c1 = contract(j, J);
                if (c1.sign) {
                    const FormTerm w1 = wedge(i, c1.axes);
                    if (w1.sign) B(row(w1.axes), b) += w * c1.sign * w1.sign;
                }
                const FormTerm w2 = wedge(i, J);
                if (w2.sign) {
                    const FormTerm c2 = contract(j, w2.axes);
                    if (c2.sign) B(row(c2.axes), b) += w * w2.sign * c2.sign;
                }
            }
    }
    return B;
}

}  // namespace witten
