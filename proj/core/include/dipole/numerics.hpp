#pragma once

#include <span>
#include <vector>

namespace dipole::num {

// Neumaier variant of Kahan summation.
class CompensatedSum {
public:
    void add(double x);
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// Finite-difference weights (Fornberg). Returns (m+1) rows of x.size() weights;
// row d approximates the d-th derivative at x0.
std::vector<double> fornberg_weights(double x0, std::span<const double> x, int m);

// Weights w_j with sum_j w_j f(x_j) = integral over [a,b] of the interpolant through (x_j, f_j).
std::vector<double> interpolant_integral_weights(std::span<const double> x, double a, double b);

std::vector<double> log_spaced(double a, double b, int n);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y);
// Least-squares slope of log(y) against log(x).
LineFit fit_loglog(std::span<const double> x, std::span<const double> y);

// General banded matrix solved with LAPACK dgbsv.
class BandMatrix {
public:
    BandMatrix(int n, int kl, int ku);

    int size() const { return n_; }
    void add(int i, int j, double v);
    double at(int i, int j) const;
    std::vector<double> solve(std::vector<double> rhs) const;

private:
    int n_, kl_, ku_, ldab_;
    std::vector<double> ab_;
};

}  // namespace dipole::num
