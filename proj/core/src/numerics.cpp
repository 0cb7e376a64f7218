#include "dipole/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dipole/errors.hpp"

extern "C" void dgbsv_(const int* n, const int* kl, const int* ku, const int* nrhs, double* ab,
                       const int* ldab, int* ipiv, double* b, const int* ldb, int* info);

namespace dipole::num {

void CompensatedSum::add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
        comp_ += (sum_ - t) + x;
    } else {
        comp_ += (x - t) + sum_;
    }
    sum_ = t;
}

std::vector<double> fornberg_weights(double x0, std::span<const double> x, int m) {
    const int n = static_cast<int>(x.size());
    std::vector<double> c(static_cast<size_t>((m + 1) * n), 0.0);
    auto at = [&](int d, int j) -> double& { return c[static_cast<size_t>(d * n + j)]; };
    double c1 = 1.0;
    double c4 = x[0] - x0;
    at(0, 0) = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k) {
                    at(k, i) = c1 * (k * at(k - 1, i - 1) - c5 * at(k, i - 1)) / c2;
                }
                at(0, i) = -c1 * c5 * at(0, i - 1) / c2;
            }
            for (int k = mn; k >= 1; --k) {
                at(k, j) = (c4 * at(k, j) - k * at(k - 1, j)) / c3;
            }
            at(0, j) = c4 * at(0, j) / c3;
        }
        c1 = c2;
    }
    return c;
}

std::vector<double> interpolant_integral_weights(std::span<const double> x, double a, double b) {
    // 6-point Gauss-Legendre integrates the interpolant exactly for up to 12 nodes.
    static constexpr double gx[6] = {-0.9324695142031521, -0.6612093864662645, -0.2386191860831969,
                                     0.2386191860831969,  0.6612093864662645,  0.9324695142031521};
    static constexpr double gw[6] = {0.1713244923791704, 0.3607615730481386, 0.4679139345726910,
                                     0.4679139345726910, 0.3607615730481386, 0.1713244923791704};
    if (x.size() > 12) throw InvalidArgument("interpolant_integral_weights: too many nodes");
    std::vector<double> w(x.size(), 0.0);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (int q = 0; q < 6; ++q) {
        const auto lw = fornberg_weights(mid + half * gx[q], x, 0);
        for (size_t j = 0; j < x.size(); ++j) w[j] += half * gw[q] * lw[j];
    }
    return w;
}

std::vector<double> log_spaced(double a, double b, int n) {
    if (!(a > 0.0 && b > a) || n < 2) throw InvalidArgument("log_spaced: need 0 < a < b and n >= 2");
    std::vector<double> out(static_cast<size_t>(n));
    const double la = std::log(a), lb = std::log(b);
    for (int i = 0; i < n; ++i) out[static_cast<size_t>(i)] = std::exp(la + (lb - la) * i / (n - 1));
    return out;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    const size_t n = x.size();
    if (n < 2 || y.size() != n) throw InvalidArgument("fit_line: need at least two matching samples");
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    return f;
}

LineFit fit_loglog(std::span<const double> x, std::span<const double> y) {
    std::vector<double> lx(x.size()), ly(y.size());
    for (size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InvalidArgument("fit_loglog: samples must be positive");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    return fit_line(lx, ly);
}

BandMatrix::BandMatrix(int n, int kl, int ku)
    : n_(n), kl_(kl), ku_(ku), ldab_(2 * kl + ku + 1),
      ab_(static_cast<size_t>(ldab_) * static_cast<size_t>(n), 0.0) {}

void BandMatrix::add(int i, int j, double v) {
    if (j - i > ku_ || i - j > kl_ || i < 0 || j < 0 || i >= n_ || j >= n_) {
        throw InvalidArgument("BandMatrix: entry (" + std::to_string(i) + "," + std::to_string(j) +
                              ") outside band");
    }
    ab_[static_cast<size_t>(kl_ + ku_ + i - j) + static_cast<size_t>(j) * static_cast<size_t>(ldab_)] += v;
}

double BandMatrix::at(int i, int j) const {
    if (j - i > ku_ || i - j > kl_) return 0.0;
    return ab_[static_cast<size_t>(kl_ + ku_ + i - j) + static_cast<size_t>(j) * static_cast<size_t>(ldab_)];
}

std::vector<double> BandMatrix::solve(std::vector<double> rhs) const {
    if (static_cast<int>(rhs.size()) != n_) throw InvalidArgument("BandMatrix::solve: size mismatch");
    std::vector<double> ab = ab_;
    std::vector<int> ipiv(static_cast<size_t>(n_));
    const int nrhs = 1;
    int info = 0;
    dgbsv_(&n_, &kl_, &ku_, &nrhs, ab.data(), &ldab_, ipiv.data(), rhs.data(), &n_, &info);
    if (info != 0) throw NumericalError("banded solve failed (singular matrix)", static_cast<double>(info));
    return rhs;
}

}  // namespace dipole::num
