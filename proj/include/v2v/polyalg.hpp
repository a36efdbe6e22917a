#pragma once

#include <vector>

#include "v2v/numtheory.hpp"

namespace v2v {

// Univariate polynomial with coefficients reduced mod `modulus`;
// coeffs[k] is the degree-k coefficient. The zero polynomial is the
// empty coefficient list.
struct UniPoly {
    std::vector<Int> coeffs;
    Int modulus;

    UniPoly() = default;
    UniPoly(std::vector<Int> c, Int m);

    bool is_zero() const { return coeffs.empty(); }
    // -1 for the zero polynomial.
    int degree() const { return static_cast<int>(coeffs.size()) - 1; }
};

enum class PolyFamily {
    Generic,     // dense coefficient matrix
    Squared,     // P(x,y) = R(x,y)^2, stored via R; range is QR_M u {0}
    Homomorphic, // P(x,y) = x * A(y)^2, stored via A; additive in x
};

// Bivariate polynomial of declared degrees (d-1 in x, q-1 in y).
// coeffs[a][b] multiplies x^a y^b and refers to the *stored* polynomial:
// the matrix itself for Generic, R for Squared, and the single row A for
// Homomorphic.
struct BiPoly {
    PolyFamily family = PolyFamily::Generic;
    std::vector<std::vector<Int>> coeffs;
    Int modulus;
    unsigned d = 0; // x-degree bound + 1 of the stored polynomial
    unsigned q = 0; // y-degree bound + 1
};

struct SharePoint {
    Int x_coord;
    Int value;
};

Int eval_uni(const UniPoly& p, const Int& y);
Int eval_bi(const BiPoly& p, const Int& x, const Int& y);

// Substitute x = x0: univariate polynomial in y. Degree <= q-1 for Generic,
// <= 2(q-1) for Squared and Homomorphic (both carry a squared factor in y).
UniPoly partial_x(const BiPoly& p, const Int& x0);

// Substitute y = y0: univariate polynomial in x.
UniPoly partial_y(const BiPoly& p, const Int& y0);

// Free coefficient (value at x = 0) of the unique polynomial of degree
// n-1 through the n given points, over the prime field F_prime_modulus.
Int interpolate_free_coeff(const std::vector<SharePoint>& points,
                           const Int& prime_modulus);

BiPoly gen_bipoly(PolyFamily family, unsigned d, unsigned q, const Int& modulus,
                  Rng& rng);

// Convolution square of a univariate polynomial (helper for the Squared
// and Homomorphic families).
UniPoly square_uni(const UniPoly& p);

} // namespace v2v
