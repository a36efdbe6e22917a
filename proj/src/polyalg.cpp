#include "v2v/polyalg.hpp"

#include <algorithm>

namespace v2v {

namespace {

Int mod_reduce(const Int& x, const Int& m) {
    Int r = x % m;
    if (r < 0) r += m;
    return r;
}

void normalize(std::vector<Int>& coeffs, const Int& m) {
    for (auto& c : coeffs) c = mod_reduce(c, m);
    while (!coeffs.empty() && coeffs.back() == 0) coeffs.pop_back();
}

bool is_probable_prime(const Int& n) {
    return mpz_probab_prime_p(n.get_mpz_t(), 64) > 0;
}

} // namespace

UniPoly::UniPoly(std::vector<Int> c, Int m) : coeffs(std::move(c)), modulus(std::move(m)) {
    if (modulus < 2) throw ParameterError("UniPoly: modulus must be >= 2");
    normalize(coeffs, modulus);
}

Int eval_uni(const UniPoly& p, const Int& y) {
    Int acc = 0;
    Int yr = mod_reduce(y, p.modulus);
    for (size_t i = p.coeffs.size(); i-- > 0;)
        acc = (acc * yr + p.coeffs[i]) % p.modulus;
    return acc;
}

UniPoly square_uni(const UniPoly& p) {
    if (p.is_zero()) return p;
    std::vector<Int> out(2 * p.coeffs.size() - 1, 0);
    for (size_t i = 0; i < p.coeffs.size(); ++i)
        for (size_t j = 0; j < p.coeffs.size(); ++j)
            out[i + j] += p.coeffs[i] * p.coeffs[j];
    return UniPoly(std::move(out), p.modulus);
}

namespace {

// Row/column substitution on a raw coefficient matrix.
UniPoly matrix_partial_x(const std::vector<std::vector<Int>>& c, const Int& x0,
                         const Int& m) {
    size_t q = 0;
    for (const auto& row : c) q = std::max(q, row.size());
    std::vector<Int> out(q, 0);
    Int xr = mod_reduce(x0, m);
    Int xpow = 1;
    for (const auto& row : c) {
        for (size_t b = 0; b < row.size(); ++b) out[b] += row[b] * xpow % m;
        xpow = xpow * xr % m;
    }
    return UniPoly(std::move(out), m);
}

UniPoly matrix_partial_y(const std::vector<std::vector<Int>>& c, const Int& y0,
                         const Int& m) {
    std::vector<Int> out(c.size(), 0);
    Int yr = mod_reduce(y0, m);
    for (size_t a = 0; a < c.size(); ++a) {
        Int acc = 0;
        for (size_t b = c[a].size(); b-- > 0;) acc = (acc * yr + c[a][b]) % m;
        out[a] = acc;
    }
    return UniPoly(std::move(out), m);
}

} // namespace

Int eval_bi(const BiPoly& p, const Int& x, const Int& y) {
    switch (p.family) {
    case PolyFamily::Generic:
        return eval_uni(matrix_partial_x(p.coeffs, x, p.modulus), y);
    case PolyFamily::Squared: {
        Int r = eval_uni(matrix_partial_x(p.coeffs, x, p.modulus), y);
        return r * r % p.modulus;
    }
    case PolyFamily::Homomorphic: {
        Int a = eval_uni(UniPoly(p.coeffs.at(0), p.modulus), y);
        return mod_reduce(x, p.modulus) * (a * a % p.modulus) % p.modulus;
    }
    }
    throw ParameterError("eval_bi: unknown family");
}

UniPoly partial_x(const BiPoly& p, const Int& x0) {
    switch (p.family) {
    case PolyFamily::Generic:
        return matrix_partial_x(p.coeffs, x0, p.modulus);
    case PolyFamily::Squared:
        return square_uni(matrix_partial_x(p.coeffs, x0, p.modulus));
    case PolyFamily::Homomorphic: {
        UniPoly a2 = square_uni(UniPoly(p.coeffs.at(0), p.modulus));
        Int xr = mod_reduce(x0, p.modulus);
        for (auto& c : a2.coeffs) c = c * xr % p.modulus;
        return UniPoly(std::move(a2.coeffs), p.modulus);
    }
    }
    throw ParameterError("partial_x: unknown family");
}

UniPoly partial_y(const BiPoly& p, const Int& y0) {
    switch (p.family) {
    case PolyFamily::Generic:
        return matrix_partial_y(p.coeffs, y0, p.modulus);
    case PolyFamily::Squared:
        return square_uni(matrix_partial_y(p.coeffs, y0, p.modulus));
    case PolyFamily::Homomorphic: {
        Int a = eval_uni(UniPoly(p.coeffs.at(0), p.modulus), y0);
        return UniPoly({Int(0), a * a % p.modulus}, p.modulus);
    }
    }
    throw ParameterError("partial_y: unknown family");
}

Int interpolate_free_coeff(const std::vector<SharePoint>& points,
                           const Int& prime_modulus) {
    if (points.empty()) throw ParameterError("interpolate_free_coeff: no points");
    if (!is_probable_prime(prime_modulus))
        throw ParameterError("interpolate_free_coeff: modulus must be prime");
    const Int& p = prime_modulus;
    std::vector<Int> xs(points.size());
    for (size_t i = 0; i < points.size(); ++i) xs[i] = mod_reduce(points[i].x_coord, p);
    for (size_t i = 0; i < xs.size(); ++i)
        for (size_t j = i + 1; j < xs.size(); ++j)
            if (xs[i] == xs[j])
                throw ParameterError("interpolate_free_coeff: duplicate x coordinate");

    // f(0) = sum_i y_i * prod_{j != i} x_j / (x_j - x_i)
    Int acc = 0;
    for (size_t i = 0; i < points.size(); ++i) {
        Int num = 1, den = 1;
        for (size_t j = 0; j < points.size(); ++j) {
            if (j == i) continue;
            num = num * xs[j] % p;
            den = den * mod_reduce(xs[j] - xs[i], p) % p;
        }
        Int den_inv;
        if (mpz_invert(den_inv.get_mpz_t(), den.get_mpz_t(), p.get_mpz_t()) == 0)
            throw ParameterError("interpolate_free_coeff: non-invertible difference");
        acc = (acc + mod_reduce(points[i].value, p) * num % p * den_inv) % p;
    }
    return acc;
}

BiPoly gen_bipoly(PolyFamily family, unsigned d, unsigned q, const Int& modulus,
                  Rng& rng) {
    if (d < 2 || q < 2) throw ParameterError("gen_bipoly: d and q must be >= 2");
    if (modulus < 2) throw ParameterError("gen_bipoly: bad modulus");
    BiPoly p;
    p.family = family;
    p.modulus = modulus;
    p.d = d;
    p.q = q;
    unsigned rows = family == PolyFamily::Homomorphic ? 1 : d;
    p.coeffs.resize(rows);
    for (auto& row : p.coeffs) {
        row.resize(q);
        for (auto& c : row) c = rng.uniform_below(modulus);
    }
    if (family != PolyFamily::Homomorphic) {
        // keep the declared degrees exact
        if (p.coeffs[rows - 1][q - 1] == 0) p.coeffs[rows - 1][q - 1] = 1;
    } else if (p.coeffs[0][q - 1] == 0) {
        p.coeffs[0][q - 1] = 1;
    }
    return p;
}

} // namespace v2v
