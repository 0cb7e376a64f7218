#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace dipole {

// Uniform radial grid r_i = i * r_max / (n_points - 1).
struct GridSpec {
    double r_max = 25.0;
    int n_points = 4096;

    void validate() const;
    double spacing() const { return r_max / (n_points - 1); }
    double r(int i) const { return i * spacing(); }
    bool operator==(const GridSpec&) const = default;
};

// gaussian_weighted profiles store v(r) = exp(r^2/4) a(r) so that tails keep
// full relative precision; the other classes store a(r) itself.
// Logarithmically growing stream functions are tagged bounded.
enum class Decay { gaussian_weighted, polynomial_growth, bounded };
enum class Parity { cos_mode, sin_mode };

std::string to_string(Decay d);
std::string to_string(Parity p);
Decay decay_from_string(const std::string& s);
Parity parity_from_string(const std::string& s);

// Coarsest class of the two; used when adding profiles.
Decay weaker(Decay a, Decay b);

class RadialProfile {
public:
    RadialProfile() = default;
    RadialProfile(const GridSpec& grid, Decay decay, std::vector<double> stored);

    static RadialProfile zero(const GridSpec& grid, Decay decay);
    // Samples a(r). For gaussian_weighted the value is rescaled on storage.
    static RadialProfile sample(const GridSpec& grid, Decay decay, const std::function<double(double)>& a);
    // Samples v(r) where a(r) = exp(-r^2/4) v(r).
    static RadialProfile sample_scaled(const GridSpec& grid, const std::function<double(double)>& v);

    const GridSpec& grid() const { return grid_; }
    Decay decay() const { return decay_; }
    int size() const { return static_cast<int>(stored_.size()); }

    const std::vector<double>& stored() const { return stored_; }
    std::vector<double>& stored() { return stored_; }

    double value(int i) const;
    std::vector<double> values() const;

    // Converts to an unscaled class; gaussian -> other loses tail precision only.
    RadialProfile converted(Decay target) const;

    RadialProfile& operator*=(double s);
    // Adds s * other; classes are merged with weaker().
    void axpy(double s, const RadialProfile& other);

    double max_abs_stored() const;

    void write_csv(std::ostream& os) const;

private:
    GridSpec grid_;
    Decay decay_ = Decay::bounded;
    std::vector<double> stored_;
};

struct ModeKey {
    int n = 0;
    Parity parity = Parity::cos_mode;
    auto operator<=>(const ModeKey&) const = default;
};

std::string to_string(const ModeKey& k);

// Finite angular Fourier sum  sum_n a_n(r) cos(n theta) + b_n(r) sin(n theta).
class PolarField {
public:
    PolarField() = default;
    explicit PolarField(const GridSpec& grid) : grid_(grid) {}

    const GridSpec& grid() const { return grid_; }
    const std::map<ModeKey, RadialProfile>& modes() const { return modes_; }
    bool empty() const { return modes_.empty(); }

    void set(ModeKey key, RadialProfile profile);
    void accumulate(ModeKey key, const RadialProfile& profile, double coef = 1.0);
    const RadialProfile* find(ModeKey key) const;
    int max_mode() const;

    PolarField& operator+=(const PolarField& other);
    PolarField& operator-=(const PolarField& other);
    PolarField& operator*=(double s);

    // Mode-0 part and its complement.
    PolarField radial_part() const;
    PolarField nonradial_part() const;
    PolarField only(Parity p) const;

    // Drops modes whose stored sup-norm is at most tol.
    void prune(double tol);

    double max_abs_stored() const;

    // Long-format CSV: r, then one column per mode.
    void write_csv(std::ostream& os) const;

private:
    void check_key(const ModeKey& key, const RadialProfile& p) const;

    GridSpec grid_;
    std::map<ModeKey, RadialProfile> modes_;
};

PolarField operator+(PolarField a, const PolarField& b);
PolarField operator-(PolarField a, const PolarField& b);
PolarField operator*(double s, PolarField a);

// Truncated double series  sum_{k<=order_eps, j<=order_delta} eps^k delta^j F_{k,j}.
class EpsDeltaSeries {
public:
    EpsDeltaSeries(const GridSpec& grid, int order_eps, int order_delta);

    const GridSpec& grid() const { return grid_; }
    int order_eps() const { return order_eps_; }
    int order_delta() const { return order_delta_; }
    std::size_t truncated_terms() const { return truncated_; }
    const std::map<std::pair<int, int>, PolarField>& terms() const { return terms_; }

    void add_term(int k, int j, const PolarField& f, double coef = 1.0);
    PolarField coefficient(int k, int j) const;

    EpsDeltaSeries& operator+=(const EpsDeltaSeries& other);
    EpsDeltaSeries& scale(double s);
    EpsDeltaSeries& multiply_by_eps_power(int p);

    PolarField evaluate(double eps, double delta) const;

private:
    GridSpec grid_;
    int order_eps_;
    int order_delta_;
    std::size_t truncated_ = 0;
    std::map<std::pair<int, int>, PolarField> terms_;
};

// Composite 6-point Newton-Cotes weights on nodes 0..n_nodes-1 with spacing h.
// Leftover intervals are integrated with the quintic through the last six nodes.
const std::vector<double>& radial_weights(double h, int n_nodes);

// Integral over [0, r_max] of a(r) r^power dr.
double quad_radial(const RadialProfile& p, int power);
// Same, restricted to nodes with r_i <= r_cut.
double quad_radial(const RadialProfile& p, int power, double r_cut);

struct Moments {
    double mass = 0.0;
    double m1 = 0.0;
    double m2 = 0.0;
};

Moments moments(const PolarField& f);

// Weighted inner product with weight exp(|xi|^2/4); Gaussian-weighted fields only.
double y_inner(const PolarField& f, const PolarField& g);
double y_norm(const PolarField& f);
double y_norm(const PolarField& f, double r_cut);

}  // namespace dipole
