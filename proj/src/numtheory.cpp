#include "v2v/numtheory.hpp"

#include <algorithm>
#include <set>

namespace v2v {

namespace {

constexpr int kMillerRabinRounds = 64; // error < 4^-64 < 2^-80

bool is_probable_prime(const Int& n) {
    return mpz_probab_prime_p(n.get_mpz_t(), kMillerRabinRounds) > 0;
}

} // namespace

Rng::Rng(uint64_t seed) {
    gmp_randinit_mt(state_);
    gmp_randseed_ui(state_, static_cast<unsigned long>(seed));
}

Rng::~Rng() { gmp_randclear(state_); }

Int Rng::uniform_below(const Int& bound) {
    if (bound <= 0) throw ParameterError("Rng::uniform_below: bound must be positive");
    Int r;
    mpz_urandomm(r.get_mpz_t(), state_, bound.get_mpz_t());
    return r;
}

Int Rng::uniform_bits(unsigned bits) {
    Int r;
    mpz_urandomb(r.get_mpz_t(), state_, bits);
    return r;
}

uint64_t Rng::next_u64() {
    Int r = uniform_bits(64);
    uint64_t out = 0;
    for (int i = 0; i < 2; ++i) {
        Int part = r >> (32 * i);
        out |= static_cast<uint64_t>(mpz_get_ui(part.get_mpz_t()) & 0xffffffffu) << (32 * i);
    }
    return out;
}

Modulus Modulus::from_factors(std::vector<Int> factors) {
    if (factors.empty()) throw ParameterError("Modulus: no factors");
    Int product = 1;
    for (const auto& p : factors) {
        if (p < 3 || mpz_even_p(p.get_mpz_t()))
            throw ParameterError("Modulus: factor not an odd prime: " + p.get_str());
        if (!is_probable_prime(p))
            throw ParameterError("Modulus: factor fails primality test: " + p.get_str());
        product *= p;
    }
    for (size_t i = 0; i < factors.size(); ++i)
        for (size_t j = i + 1; j < factors.size(); ++j)
            if (factors[i] == factors[j])
                throw ParameterError("Modulus: repeated factor: " + factors[i].get_str());
    Modulus m;
    m.value = product;
    m.factors = std::move(factors);
    return m;
}

size_t Modulus::enc_width() const {
    return (mpz_sizeinbase(value.get_mpz_t(), 2) + 7) / 8;
}

Int gen_prime(unsigned bits, Rng& rng) {
    if (bits < 3) throw ParameterError("gen_prime: bits must be >= 3");
    for (;;) {
        Int c = rng.uniform_bits(bits - 1);
        c |= Int(1) << (bits - 1); // exact bit length
        c |= 1;                    // odd
        if (is_probable_prime(c)) return c;
    }
}

LegendreValue legendre(const Int& x, const Int& p) {
    if (p < 3 || mpz_even_p(p.get_mpz_t()))
        throw ParameterError("legendre: modulus must be an odd prime");
    Int e = (p - 1) / 2;
    Int r;
    mpz_powm(r.get_mpz_t(), x.get_mpz_t(), e.get_mpz_t(), p.get_mpz_t());
    if (r == 0) return LegendreValue::Zero;
    if (r == 1) return LegendreValue::PlusOne;
    return LegendreValue::MinusOne; // r == p-1 for prime p
}

LegendreValue jacobi(const Int& x, const Modulus& m) {
    int prod = 1;
    for (const auto& p : m.factors) {
        LegendreValue l = legendre(x, p);
        if (l == LegendreValue::Zero) return LegendreValue::Zero;
        prod *= static_cast<int>(l);
    }
    return prod > 0 ? LegendreValue::PlusOne : LegendreValue::MinusOne;
}

bool is_qr(const Int& x, const Modulus& m) {
    for (const auto& p : m.factors)
        if (legendre(x, p) != LegendreValue::PlusOne) return false;
    return true;
}

std::vector<Int> sqrt_mod_prime(const Int& x, const Int& p) {
    if (p < 3 || mpz_even_p(p.get_mpz_t()))
        throw ParameterError("sqrt_mod_prime: modulus must be an odd prime");
    Int a = x % p;
    if (a < 0) a += p;
    if (a == 0) return {0};
    if (legendre(a, p) != LegendreValue::PlusOne) return {};

    // Tonelli-Shanks. Write p-1 = q * 2^s with q odd.
    Int q = p - 1;
    unsigned s = 0;
    while (mpz_even_p(q.get_mpz_t())) {
        q /= 2;
        ++s;
    }
    Int r;
    if (s == 1) { // p = 3 mod 4
        Int e = (p + 1) / 4;
        mpz_powm(r.get_mpz_t(), a.get_mpz_t(), e.get_mpz_t(), p.get_mpz_t());
    } else {
        Int z = 2;
        while (legendre(z, p) != LegendreValue::MinusOne) ++z;
        Int c;
        mpz_powm(c.get_mpz_t(), z.get_mpz_t(), q.get_mpz_t(), p.get_mpz_t());
        Int e = (q + 1) / 2;
        mpz_powm(r.get_mpz_t(), a.get_mpz_t(), e.get_mpz_t(), p.get_mpz_t());
        Int t;
        mpz_powm(t.get_mpz_t(), a.get_mpz_t(), q.get_mpz_t(), p.get_mpz_t());
        unsigned m = s;
        while (t != 1) {
            Int t2 = t;
            unsigned i = 0;
            while (t2 != 1) {
                t2 = t2 * t2 % p;
                ++i;
            }
            Int b = c;
            for (unsigned k = 0; k + i + 1 < m; ++k) b = b * b % p;
            r = r * b % p;
            c = b * b % p;
            t = t * c % p;
            m = i;
        }
    }
    Int other = p - r;
    if (r > other) std::swap(r, other);
    return {r, other};
}

Int crt_combine(const std::vector<std::pair<Int, Int>>& residues) {
    if (residues.empty()) throw ParameterError("crt_combine: empty input");
    for (size_t i = 0; i < residues.size(); ++i)
        for (size_t j = i + 1; j < residues.size(); ++j) {
            Int g;
            mpz_gcd(g.get_mpz_t(), residues[i].second.get_mpz_t(),
                    residues[j].second.get_mpz_t());
            if (g != 1) throw ParameterError("crt_combine: moduli not coprime");
        }
    Int x = residues[0].first % residues[0].second;
    if (x < 0) x += residues[0].second;
    Int m = residues[0].second;
    for (size_t i = 1; i < residues.size(); ++i) {
        const Int& mi = residues[i].second;
        Int ri = residues[i].first % mi;
        if (ri < 0) ri += mi;
        Int minv;
        if (mpz_invert(minv.get_mpz_t(), m.get_mpz_t(), mi.get_mpz_t()) == 0)
            throw ParameterError("crt_combine: moduli not coprime");
        Int k = (ri - x) % mi * minv % mi;
        if (k < 0) k += mi;
        x += k * m;
        m *= mi;
    }
    return x;
}

std::vector<Int> enumerate_qr(const Modulus& m, const NumTheoryLimits& limits) {
    if (m.value > limits.qr_enum_bound)
        throw CapabilityError("enumerate_qr: modulus above enumeration bound");
    uint64_t M = mpz_get_ui(m.value.get_mpz_t());
    std::set<uint64_t> qrs;
    for (uint64_t y = 1; y < M; ++y) {
        if (std::__gcd(y, M) != 1) continue;
        qrs.insert(y * y % M);
    }
    std::vector<Int> out;
    out.reserve(qrs.size());
    for (uint64_t q : qrs) out.emplace_back(static_cast<unsigned long>(q));
    return out;
}

namespace {

// Dense polynomial arithmetic mod an odd prime, used by the equal-degree
// splitting path. Coefficient index = degree; always trimmed.
using Poly = std::vector<Int>;

void trim(Poly& f) {
    while (!f.empty() && f.back() == 0) f.pop_back();
}

Poly reduce_coeffs(const std::vector<Int>& coeffs, const Int& p) {
    Poly f(coeffs.size());
    for (size_t i = 0; i < coeffs.size(); ++i) {
        f[i] = coeffs[i] % p;
        if (f[i] < 0) f[i] += p;
    }
    trim(f);
    return f;
}

Poly poly_mul(const Poly& a, const Poly& b, const Int& p) {
    if (a.empty() || b.empty()) return {};
    Poly c(a.size() + b.size() - 1, 0);
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
    for (auto& x : c) x %= p;
    trim(c);
    return c;
}

// Remainder of a mod b, b nonzero.
Poly poly_rem(Poly a, const Poly& b, const Int& p) {
    Int lead_inv;
    mpz_invert(lead_inv.get_mpz_t(), b.back().get_mpz_t(), p.get_mpz_t());
    while (a.size() >= b.size()) {
        Int q = a.back() * lead_inv % p;
        size_t shift = a.size() - b.size();
        for (size_t i = 0; i < b.size(); ++i) {
            a[shift + i] = (a[shift + i] - q * b[i]) % p;
            if (a[shift + i] < 0) a[shift + i] += p;
        }
        trim(a);
        if (a.empty()) break;
    }
    return a;
}

Poly poly_gcd(Poly a, Poly b, const Int& p) {
    while (!b.empty()) {
        Poly r = poly_rem(a, b, p);
        a = std::move(b);
        b = std::move(r);
    }
    if (!a.empty() && a.back() != 1) { // monic
        Int inv;
        mpz_invert(inv.get_mpz_t(), a.back().get_mpz_t(), p.get_mpz_t());
        for (auto& c : a) c = c * inv % p;
    }
    return a;
}

// base^e mod (f, p)
Poly poly_powmod(Poly base, Int e, const Poly& f, const Int& p) {
    Poly result{1};
    base = poly_rem(std::move(base), f, p);
    while (e > 0) {
        if (mpz_odd_p(e.get_mpz_t()))
            result = poly_rem(poly_mul(result, base, p), f, p);
        base = poly_rem(poly_mul(base, base, p), f, p);
        e /= 2;
    }
    return result;
}

void split_linear_product(const Poly& g, const Int& p, std::vector<Int>& roots,
                          Int& shift) {
    // g is monic, squarefree, and a product of distinct linear factors.
    if (g.empty() || g.size() == 1) return;
    if (g.size() == 2) {
        Int inv;
        mpz_invert(inv.get_mpz_t(), g[1].get_mpz_t(), p.get_mpz_t());
        Int root = (p - g[0]) * inv % p;
        roots.push_back(root);
        return;
    }
    Int half = (p - 1) / 2;
    for (;;) {
        Poly xa{shift, 1};
        shift += 1;
        Poly h = poly_powmod(xa, half, g, p);
        if (h.empty()) { // shift value itself is a root of g
            continue;
        }
        h[0] = (h[0] + p - 1) % p;
        trim(h);
        Poly d = poly_gcd(g, h, p);
        if (d.size() > 1 && d.size() < g.size()) {
            split_linear_product(d, p, roots, shift);
            Poly q = g, rem;
            // divide g by d
            Poly quot;
            {
                Poly a = g;
                quot.assign(a.size() - d.size() + 1, 0);
                while (a.size() >= d.size()) {
                    Int qq = a.back(); // d is monic
                    size_t sh = a.size() - d.size();
                    quot[sh] = qq;
                    for (size_t i = 0; i < d.size(); ++i) {
                        a[sh + i] = (a[sh + i] - qq * d[i]) % p;
                        if (a[sh + i] < 0) a[sh + i] += p;
                    }
                    trim(a);
                    if (a.empty()) break;
                }
            }
            split_linear_product(quot, p, roots, shift);
            return;
        }
    }
}

} // namespace

std::vector<Int> poly_roots_mod_prime(const std::vector<Int>& coeffs,
                                      const Int& p,
                                      const NumTheoryLimits& limits) {
    if (p < 3 || mpz_even_p(p.get_mpz_t()))
        throw ParameterError("poly_roots_mod_prime: modulus must be an odd prime");
    Poly f = reduce_coeffs(coeffs, p);
    if (f.empty())
        throw ParameterError("poly_roots_mod_prime: zero polynomial");
    if (f.size() == 1) return {}; // nonzero constant

    std::vector<Int> roots;
    if (p < limits.root_scan_bound) {
        uint64_t pp = mpz_get_ui(p.get_mpz_t());
        std::vector<uint64_t> fc(f.size());
        for (size_t i = 0; i < f.size(); ++i) fc[i] = mpz_get_ui(f[i].get_mpz_t());
        for (uint64_t x = 0; x < pp; ++x) {
            uint64_t acc = 0;
            for (size_t i = f.size(); i-- > 0;) acc = (acc * x + fc[i]) % pp;
            if (acc == 0) roots.emplace_back(static_cast<unsigned long>(x));
        }
        return roots;
    }

    // g = gcd(f, x^p - x) collects the distinct roots.
    Poly x_poly{0, 1};
    Poly xp = poly_powmod(x_poly, p, f, p);
    // xp - x
    if (xp.size() < 2) xp.resize(2, 0);
    xp[1] = (xp[1] + p - 1) % p;
    trim(xp);
    Poly g;
    if (xp.empty()) {
        g = f;
        Int inv;
        mpz_invert(inv.get_mpz_t(), g.back().get_mpz_t(), p.get_mpz_t());
        for (auto& c : g) c = c * inv % p;
    } else {
        g = poly_gcd(f, xp, p);
    }
    if (!g.empty() && g.size() > 1 && g[0] == 0) {
        // factor out x
        roots.push_back(0);
        g.erase(g.begin());
        trim(g);
    }
    Int shift = 1;
    split_linear_product(g, p, roots, shift);
    std::sort(roots.begin(), roots.end());
    return roots;
}

std::vector<Int> poly_roots_mod_composite(const std::vector<Int>& coeffs,
                                          const Modulus& m,
                                          const NumTheoryLimits& limits) {
    std::vector<std::vector<Int>> per_prime;
    size_t product = 1;
    for (const auto& p : m.factors) {
        Poly reduced = reduce_coeffs(coeffs, p);
        std::vector<Int> roots;
        if (reduced.empty()) {
            // polynomial vanishes identically mod p: every residue is a root
            if (p > limits.crt_root_cap)
                throw CapabilityError(
                    "poly_roots_mod_composite: zero polynomial mod a large factor");
            for (Int x = 0; x < p; ++x) roots.push_back(x);
        } else {
            roots = poly_roots_mod_prime(coeffs, p, limits);
        }
        if (roots.empty()) return {};
        product *= roots.size();
        if (product > limits.crt_root_cap)
            throw CapabilityError("poly_roots_mod_composite: root set too large");
        per_prime.push_back(std::move(roots));
    }

    std::vector<Int> out;
    std::vector<size_t> idx(per_prime.size(), 0);
    for (;;) {
        std::vector<std::pair<Int, Int>> residues;
        residues.reserve(per_prime.size());
        for (size_t i = 0; i < per_prime.size(); ++i)
            residues.emplace_back(per_prime[i][idx[i]], m.factors[i]);
        out.push_back(crt_combine(residues));
        size_t i = 0;
        while (i < idx.size() && ++idx[i] == per_prime[i].size()) idx[i++] = 0;
        if (i == idx.size()) break;
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace v2v
