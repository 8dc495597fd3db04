#include "ctraj/quadrature.hpp"

#include <algorithm>

namespace ctraj {

std::vector<Complex> cumulative_integral(const std::vector<Complex>& f, double h) {
    const std::size_t n = f.size();
    std::vector<Complex> out(n, Complex(0.0));
    if (n < 2) return out;
    if (n < 4) {
        for (std::size_t k = 1; k < n; ++k) out[k] = out[k - 1] + 0.5 * h * (f[k - 1] + f[k]);
        return out;
    }
    for (std::size_t k = 0; k + 1 < n; ++k) {
        Complex panel;
        if (k == 0) {
            panel = h / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]);
        } else if (k + 2 == n) {
            panel = h / 24.0 * (9.0 * f[n - 1] + 19.0 * f[n - 2] - 5.0 * f[n - 3] + f[n - 4]);
        } else {
            panel = h / 24.0 * (-f[k - 1] + 13.0 * f[k] + 13.0 * f[k + 1] - f[k + 2]);
        }
        out[k + 1] = out[k] + panel;
    }
    return out;
}

std::vector<Complex> cumulative_integral_from_end(const std::vector<Complex>& f, double h) {
    std::vector<Complex> rev(f.rbegin(), f.rend());
    auto c = cumulative_integral(rev, h);
    std::reverse(c.begin(), c.end());
    return c;
}

Complex simpson(const std::vector<Complex>& f, double h) {
    const std::size_t n = f.size();
    if (n < 2) return 0.0;
    if (n == 2) return 0.5 * h * (f[0] + f[1]);
    std::size_t end = n;
    Complex tail(0.0);
    if (n % 2 == 0) {
        // 3/8 rule on the last three panels
        end = n - 3;
        tail = 3.0 * h / 8.0 * (f[n - 4] + 3.0 * f[n - 3] + 3.0 * f[n - 2] + f[n - 1]);
    }
    if (end < 3) return tail;
    Complex acc = f[0] + f[end - 1];
    for (std::size_t k = 1; k + 1 < end; ++k) acc += (k % 2 ? 4.0 : 2.0) * f[k];
    return acc * h / 3.0 + tail;
}

std::vector<Complex> derivative(const std::vector<Complex>& f, double h) {
    const std::size_t n = f.size();
    std::vector<Complex> d(n, Complex(0.0));
    if (n < 5) {
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t a = k == 0 ? 0 : k - 1, b = std::min(n - 1, k + 1);
            if (b > a) d[k] = (f[b] - f[a]) / (h * static_cast<double>(b - a));
        }
        return d;
    }
    for (std::size_t k = 0; k < n; ++k) {
        if (k >= 2 && k + 2 < n) {
            d[k] = (f[k - 2] - 8.0 * f[k - 1] + 8.0 * f[k + 1] - f[k + 2]) / (12.0 * h);
        } else if (k < 2) {
            d[k] = (-25.0 * f[k] + 48.0 * f[k + 1] - 36.0 * f[k + 2] + 16.0 * f[k + 3] - 3.0 * f[k + 4]) / (12.0 * h);
        } else {
            d[k] = (25.0 * f[k] - 48.0 * f[k - 1] + 36.0 * f[k - 2] - 16.0 * f[k - 3] + 3.0 * f[k - 4]) / (12.0 * h);
        }
    }
    return d;
}

}  // namespace ctraj
