// Low spectrum of the deformed Laplacian for cos(4 pi x) + cos(2 pi y) as t grows:
// the cluster of m_q eigenvalues separates from a bulk that grows linearly in t.
#include <cstdio>

#include "witten/witten.hpp"

int main() {
    using namespace witten;
    const TorusGrid grid = build_grid(2, {1.0, 1.0}, {48, 48});
    const MorseFunction f(cos_sum_spec({2, 1}, {1.0, 1.0}), 2, {1.0, 1.0});
    const MorseProfile prof = find_critical_points(f, grid);
    const std::vector<int> b = betti_numbers(grid);
    std::printf("b = %s, m = %s\n", format_ints(b).c_str(), format_ints(prof.m).c_str());
    for (double t : {5.0, 10.0, 20.0, 40.0}) {
        const DeformedComplex c(grid, f, t);
        for (int q = 0; q <= 2; ++q) {
            SpectrumRequest r;
            r.q = q;
            r.t = t;
            r.k = prof.m[static_cast<std::size_t>(q)] + 3;
            const EigResult e = smallest_eigs(c.laplacian(q), r);
            const GapAnalysis g = detect_gap(e.values, r.k - 1, e.scale);
            std::printf("t=%4.0f q=%d low=%d  ", t, q, g.low_count);
            for (double v : e.values) std::printf(" %11.4e", v);
            std::printf("\n");
        }
        const ResolvedLowSpectrum s = resolve_low_spectrum(c, 0);
        if (s.available && !s.tunneling.empty()) std::printf("         q=0 tunneling eigenvalue %.6e\n", s.tunneling.front());
    }
}
