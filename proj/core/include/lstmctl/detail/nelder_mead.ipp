#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace lstmctl {

// Standard coefficients: reflection 1, expansion 2, contraction 0.5, shrink 0.5.
template <class F>
NelderMeadResult nelder_mead(F&& f, std::vector<double> x0, double initial_step, int max_evals, double f_tol) {
    const std::size_t n = x0.size();
    std::vector<std::vector<double>> simplex(n + 1, x0);
    std::vector<double> values(n + 1);
    NelderMeadResult res;
    int evals = 0;
    auto eval = [&](const std::vector<double>& x) {
        ++evals;
        return f(x);
    };
    for (std::size_t k = 0; k < n; ++k) simplex[k + 1][k] += initial_step;
    for (std::size_t k = 0; k <= n; ++k) values[k] = eval(simplex[k]);

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), xr(n), xe(n), xc(n);
    while (evals < max_evals) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];
        res.trace.push_back(values[best]);
        if (std::abs(values[worst] - values[best]) <= f_tol * (1.0 + std::abs(values[best]))) {
            double spread = 0.0;
            for (std::size_t k = 0; k <= n; ++k)
                for (std::size_t j = 0; j < n; ++j)
                    spread = std::max(spread, std::abs(simplex[k][j] - simplex[best][j]));
            if (spread <= 1e-10) break;
        }

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t k = 0; k <= n; ++k) {
            if (k == worst) continue;
            for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[k][j] / static_cast<double>(n);
        }
        for (std::size_t j = 0; j < n; ++j) xr[j] = centroid[j] + (centroid[j] - simplex[worst][j]);
        const double fr = eval(xr);
        if (fr < values[best]) {
            for (std::size_t j = 0; j < n; ++j) xe[j] = centroid[j] + 2.0 * (centroid[j] - simplex[worst][j]);
            const double fe = eval(xe);
            if (fe < fr) {
                simplex[worst] = xe;
                values[worst] = fe;
            } else {
                simplex[worst] = xr;
                values[worst] = fr;
            }
            continue;
        }
        if (fr < values[second]) {
            simplex[worst] = xr;
            values[worst] = fr;
            continue;
        }
        const bool outside = fr < values[worst];
        for (std::size_t j = 0; j < n; ++j)
            xc[j] = outside ? centroid[j] + 0.5 * (xr[j] - centroid[j])
                            : centroid[j] + 0.5 * (simplex[worst][j] - centroid[j]);
        const double fc = eval(xc);
        if (fc < (outside ? fr : values[worst])) {
            simplex[worst] = xc;
            values[worst] = fc;
            continue;
        }
        for (std::size_t k = 0; k <= n; ++k) {
            if (k == best) continue;
            for (std::size_t j = 0; j < n; ++j)
                simplex[k][j] = simplex[best][j] + 0.5 * (simplex[k][j] - simplex[best][j]);
            values[k] = eval(simplex[k]);
        }
    }
    const auto it = std::min_element(values.begin(), values.end());
    res.x = simplex[static_cast<std::size_t>(it - values.begin())];
    res.value = *it;
    res.evaluations = evals;
    res.trace.push_back(res.value);
    return res;
}

}  // namespace lstmctl
