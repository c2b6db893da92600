#ifndef DEMAILLY_GRID_HPP
#define DEMAILLY_GRID_HPP

#include <complex>
#include <stdexcept>
#include <vector>

namespace demailly {

using cplx = std::complex<double>;

/// Uniform n x n grid on the unit-volume flat torus [0,1)^2, z = x + iy.
/// Point (jx, jy) sits at (jx/n, jy/n) and is stored at index jx*n + jy.
struct GridSpec {
    int n = 0;

    GridSpec() = default;
    explicit GridSpec(int n_) : n(n_) {
        if (n < 8 || n % 2 != 0)
            throw std::invalid_argument("grid size must be even and >= 8");
    }

    int size() const { return n * n; }
    double x(int jx) const { return static_cast<double>(jx) / n; }
    double y(int jy) const { return static_cast<double>(jy) / n; }
    int index(int jx, int jy) const { return jx * n + jy; }

    bool operator==(const GridSpec& o) const { return n == o.n; }
};

/// Real function sampled on the grid (houses f, beta, a0, u_i, lambda_max).
struct ScalarField {
    GridSpec grid;
    std::vector<double> v;

    ScalarField() = default;
    explicit ScalarField(GridSpec g, double fill = 0.0) : grid(g), v(g.size(), fill) {}

    double& at(int jx, int jy) { return v[grid.index(jx, jy)]; }
    double at(int jx, int jy) const { return v[grid.index(jx, jy)]; }
    double& operator[](int p) { return v[p]; }
    double operator[](int p) const { return v[p]; }
    int size() const { return grid.size(); }

    ScalarField& operator+=(const ScalarField& o) {
        for (int p = 0; p < size(); ++p) v[p] += o.v[p];
        return *this;
    }
    ScalarField& operator-=(const ScalarField& o) {
        for (int p = 0; p < size(); ++p) v[p] -= o.v[p];
        return *this;
    }
    ScalarField& operator*=(double s) {
        for (double& x : v) x *= s;
        return *this;
    }
    ScalarField& operator+=(double c) {
        for (double& x : v) x += c;
        return *this;
    }

    friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
    friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
    friend ScalarField operator*(double s, ScalarField a) { return a *= s; }
    friend ScalarField operator*(ScalarField a, double s) { return a *= s; }
};

/// Interpretation of a complex coefficient field as a form on the torus.
enum class FormKind {
    DzCoeff,     // coefficient of dz
    DzbarCoeff,  // coefficient of dzbar
    Density      // dz^dzbar density (already contracted against omega_0)
};

/// Complex function on the grid together with its form interpretation;
/// intermediate carrier for the outputs of the holomorphic derivatives.
struct ComplexCoefficientField {
    GridSpec grid;
    FormKind kind = FormKind::DzCoeff;
    std::vector<cplx> v;

    ComplexCoefficientField() = default;
    ComplexCoefficientField(GridSpec g, FormKind k) : grid(g), kind(k), v(g.size(), cplx(0.0)) {}

    cplx& operator[](int p) { return v[p]; }
    cplx operator[](int p) const { return v[p]; }
    int size() const { return grid.size(); }
};

} // namespace demailly

#endif
