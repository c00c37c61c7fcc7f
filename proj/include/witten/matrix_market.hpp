#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "witten/errors.hpp"
#include "witten/torus_grid.hpp"

namespace witten {

inline void write_matrix_market(std::ostream& os, const SparseMatrix& A) {
    os << "%%MatrixMarket matrix coordinate real general\n";
    os << A.rows() << ' ' << A.cols() << ' ' << A.nonZeros() << '\n';
    char buf[64];
    for (Eigen::Index r = 0; r < A.outerSize(); ++r) {
        for (SparseMatrix::InnerIterator it(A, r); it; ++it) {
            std::snprintf(buf, sizeof buf, "%.17g", it.value());
            os << it.row() + 1 << ' ' << it.col() + 1 << ' ' << buf << '\n';
        }
    }
}

inline void write_matrix_market(const std::string& path, const SparseMatrix& A) {
    std::ofstream os(path);
    if (!os) throw DomainError("cannot open " + path + " for writing");
    write_matrix_market(os, A);
    if (!os) throw DomainError("write failed for " + path);
}

inline SparseMatrix read_matrix_market(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("%%MatrixMarket matrix coordinate real general", 0) != 0)
        throw DomainError("unsupported MatrixMarket header");
    while (std::getline(is, line) && !line.empty() && line[0] == '%') {
    }
    std::istringstream head(line);
    long rows = 0, cols = 0, nnz = 0;
    if (!(head >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0)
        throw DomainError("malformed MatrixMarket size line");
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(nnz));
    for (long e = 0; e < nnz; ++e) {
        long r = 0, c = 0;
        double v = 0.0;
        if (!(is >> r >> c >> v)) throw DomainError("MatrixMarket file ended early");
        if (r < 1 || r > rows || c < 1 || c > cols) throw DomainError("MatrixMarket entry out of range");
        trip.emplace_back(r - 1, c - 1, v);
    }
    SparseMatrix A(rows, cols);
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

inline SparseMatrix read_matrix_market(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DomainError("cannot open " + path);
    return read_matrix_market(is);
}

}  // namespace witten
