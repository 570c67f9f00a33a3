#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "nlac/types.hpp"

namespace nlac {

// Tridiagonal system solved by the Thomas algorithm. sub[0] and sup[n-1] are
// ignored. Elimination pivots are guarded relative to the largest row sum;
// an underflowing pivot reports the operator as singular.
template <class T>
struct Tridiag {
    std::vector<T> sub, diag, sup;

    std::size_t size() const { return diag.size(); }

    std::vector<T> apply(const std::vector<T>& x) const {
        const std::size_t n = size();
        std::vector<T> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            T acc = diag[i] * x[i];
            if (i > 0) acc += sub[i] * x[i - 1];
            if (i + 1 < n) acc += sup[i] * x[i + 1];
            y[i] = acc;
        }
        return y;
    }

    std::vector<T> solve(const std::vector<T>& rhs, double pivot_rel_floor = 1e-14) const {
        const std::size_t n = size();
        if (n == 0 || sub.size() != n || sup.size() != n || rhs.size() != n)
            throw InvalidParameter("tridiag: inconsistent system dimensions");

        double scale = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double row = std::abs(diag[i]);
            if (i > 0) row += std::abs(sub[i]);
            if (i + 1 < n) row += std::abs(sup[i]);
            scale = std::max(scale, row);
        }
        const double floor = pivot_rel_floor * scale;

        std::vector<T> c(n), d(n), x(n);
        T piv = diag[0];
        if (std::abs(piv) <= floor)
            throw SingularOperator("tridiag: pivot underflow at row 0");
        c[0] = sup[0] / piv;
        d[0] = rhs[0] / piv;
        for (std::size_t i = 1; i < n; ++i) {
            piv = diag[i] - sub[i] * c[i - 1];
            if (std::abs(piv) <= floor)
                throw SingularOperator("tridiag: pivot underflow at row " + std::to_string(i));
            c[i] = sup[i] / piv;
            d[i] = (rhs[i] - sub[i] * d[i - 1]) / piv;
        }
        x[n - 1] = d[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
        return x;
    }
};

}  // namespace nlac
