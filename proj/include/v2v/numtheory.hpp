#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "v2v/errors.hpp"

namespace v2v {

using Int = mpz_class;

// Deterministic random source. Confined to one owner at a time; every
// consumer that needs reproducibility takes one of these by reference.
class Rng {
public:
    explicit Rng(uint64_t seed);
    ~Rng();
    Rng(const Rng&) = delete;
    Rng& operator=(const Rng&) = delete;

    // Uniform in [0, bound), bound > 0.
    Int uniform_below(const Int& bound);
    // Uniform in [0, 2^bits).
    Int uniform_bits(unsigned bits);
    uint64_t next_u64();

private:
    gmp_randstate_t state_;
};

enum class LegendreValue : int {
    MinusOne = -1,
    Zero = 0,
    PlusOne = 1,
};

// Composite modulus with known factorization into distinct odd primes.
struct Modulus {
    Int value;
    std::vector<Int> factors;

    // Validates: all factors odd probable primes (error < 2^-80), pairwise
    // distinct, product equals value.
    static Modulus from_factors(std::vector<Int> factors);

    // Canonical encoding width: ceil(bits(value)/8).
    size_t enc_width() const;
};

struct NumTheoryLimits {
    // enumerate_qr refuses moduli above this.
    Int qr_enum_bound = Int(1) << 24;
    // poly_roots_mod_prime switches from exhaustive scan to equal-degree
    // splitting above this prime.
    Int root_scan_bound = Int(1) << 20;
    // poly_roots_mod_composite caps the CRT cartesian product.
    size_t crt_root_cap = 1 << 14;
};

// Odd prime of exactly `bits` bits (bits >= 3). Deterministic per seed.
Int gen_prime(unsigned bits, Rng& rng);

// x^((p-1)/2) mod p mapped to {-1, 0, +1}. p must be an odd prime.
LegendreValue legendre(const Int& x, const Int& p);

// Product of legendre(x, p_i) over the factors of m.
LegendreValue jacobi(const Int& x, const Modulus& m);

// True iff legendre(x, p_i) = +1 for every prime factor.
bool is_qr(const Int& x, const Modulus& m);

// Square roots of x mod odd prime p via Tonelli-Shanks.
// Returns {} if x is a non-residue, {0} if x = 0 mod p, else {r, p-r}.
std::vector<Int> sqrt_mod_prime(const Int& x, const Int& p);

// Unique x mod prod(p_i) with x = r_i (mod p_i). Moduli must be pairwise
// coprime.
Int crt_combine(const std::vector<std::pair<Int, Int>>& residues);

// Every quadratic residue in Z*_M, ascending. Toy profile only; throws
// CapabilityError when M exceeds limits.qr_enum_bound.
std::vector<Int> enumerate_qr(const Modulus& m,
                              const NumTheoryLimits& limits = {});

// All roots in Z_p of sum coeffs[k] x^k, each listed once. coeffs[k] is the
// degree-k coefficient. Exhaustive scan below limits.root_scan_bound,
// gcd-with-(x^p - x) equal-degree splitting above it.
std::vector<Int> poly_roots_mod_prime(const std::vector<Int>& coeffs,
                                      const Int& p,
                                      const NumTheoryLimits& limits = {});

// All roots in Z_M, via per-prime root sets and CRT over their cartesian
// product. Throws CapabilityError when the product exceeds
// limits.crt_root_cap.
std::vector<Int> poly_roots_mod_composite(const std::vector<Int>& coeffs,
                                          const Modulus& m,
                                          const NumTheoryLimits& limits = {});

} // namespace v2v
