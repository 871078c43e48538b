#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hsplit {

/// Raised when an argument lies outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Heston model constants plus the market constants used by the variable transforms.
///
/// The rate and strike never enter the transformed PDE; they only map between
/// market prices C(S, v, t) and the dimensionless value U(S~, v, tau).
struct HestonParams {
    double kappa = 0.0;    // mean-reversion rate
    double theta = 0.0;    // long-run variance
    double sigma = 0.0;    // volatility of variance
    double rho = 0.0;      // spot/variance correlation
    double maturity = 1.0; // T
    double rate = 0.0;     // r
    double strike = 1.0;   // K

    /// Throws DomainError naming the first violated constraint.
    void validate() const;
};

/// Uniform tensor grid over (S~, v) with N time steps on [0, T].
class GridSpec {
public:
    GridSpec(double s_max, double v_max, int I, int J, int N, double maturity);

    /// Grid with all three steps equal to h; s_max/h, v_max/h and T/h must be integers.
    static GridSpec uniform(double s_max, double v_max, double maturity, double h);

    double s_max() const { return s_max_; }
    double v_max() const { return v_max_; }
    double maturity() const { return maturity_; }
    int I() const { return I_; }
    int J() const { return J_; }
    int N() const { return N_; }

    double ds() const { return ds_; }
    double dv() const { return dv_; }
    double dtau() const { return dtau_; }

    double s(int i) const { return i * ds_; }
    double v(int j) const { return j * dv_; }
    double tau(int n) const { return n * dtau_; }

    std::size_t node_count() const {
        return static_cast<std::size_t>(I_ + 1) * static_cast<std::size_t>(J_ + 1);
    }

    bool operator==(const GridSpec& other) const = default;

private:
    double s_max_;
    double v_max_;
    double maturity_;
    int I_;
    int J_;
    int N_;
    double ds_;
    double dv_;
    double dtau_;
};

/// Scalar field on the (I+1) x (J+1) node set at one time level.
///
/// Storage is row-major with the S~ index contiguous: value(i, j) lives at
/// j * (I + 1) + i, so a fixed-j line is a contiguous span.
class Surface {
public:
    explicit Surface(const GridSpec& grid, double fill = 0.0, int time_index = 0);

    int I() const { return I_; }
    int J() const { return J_; }
    int time_index() const { return time_index_; }
    void set_time_index(int n) { time_index_ = n; }

    double& operator()(int i, int j) { return values_[index(i, j)]; }
    double operator()(int i, int j) const { return values_[index(i, j)]; }

    std::span<double> line(int j) {
        return {values_.data() + index(0, j), static_cast<std::size_t>(I_ + 1)};
    }
    std::span<const double> line(int j) const {
        return {values_.data() + index(0, j), static_cast<std::size_t>(I_ + 1)};
    }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    bool matches(const GridSpec& grid) const { return grid.I() == I_ && grid.J() == J_; }
    bool all_finite() const;

    Surface& operator+=(const Surface& other);
    Surface& operator-=(const Surface& other);
    Surface& operator*=(double factor);

private:
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(I_ + 1) +
               static_cast<std::size_t>(i);
    }

    int I_;
    int J_;
    int time_index_;
    std::vector<double> values_;
};

Surface operator+(Surface a, const Surface& b);
Surface operator-(Surface a, const Surface& b);
Surface operator*(double factor, Surface a);

/// Throws DomainError unless the surface dimensions match the grid.
void require_match(const Surface& u, const GridSpec& grid, const char* what);

struct TransformedPoint {
    double s_tilde;
    double tau;
};

/// (spot, t) -> (S~ = spot e^{r tau} / K, tau = T - t).
TransformedPoint to_transformed(double spot, double t, const HestonParams& p);

/// u -> C = u K e^{-r tau}. Negative u passes through; NaN is rejected.
double from_transformed(double u, double tau, const HestonParams& p);

/// Initial data (S~ - 1)^+ on every node; constant in j.
Surface payoff_surface(const GridSpec& grid);

} // namespace hsplit
