#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "v2v/numtheory.hpp"

using namespace v2v;

static Modulus M15() { return Modulus::from_factors({3, 5}); }
static Modulus M21() { return Modulus::from_factors({3, 7}); }

TEST_CASE("gen_prime basics") {
    Rng rng(1);
    Int p = gen_prime(3, rng);
    CHECK((p == 5 || p == 7));

    Rng a(42), b(42);
    CHECK(gen_prime(4, a) == gen_prime(4, b));

    Rng c(7);
    Int p10 = gen_prime(10, c);
    CHECK(p10 >= 512);
    CHECK(p10 < 1024);
    CHECK(oracle::is_prime_trial_division(mpz_get_ui(p10.get_mpz_t())));

    CHECK_THROWS_AS(gen_prime(2, rng), ParameterError);
}

TEST_CASE("legendre examples and errors") {
    CHECK(legendre(4, 7) == LegendreValue::PlusOne);
    CHECK(legendre(0, 7) == LegendreValue::Zero);
    // squares mod 7 are {1,2,4}
    CHECK(legendre(3, 7) == LegendreValue::MinusOne);
    CHECK_THROWS_AS(legendre(3, 8), ParameterError);
    CHECK_THROWS_AS(legendre(3, 1), ParameterError);
}

TEST_CASE("legendre residue counts and reduction") {
    Rng rng(11);
    for (int trial = 0; trial < 8; ++trial) {
        Int p = gen_prime(5 + trial, rng);
        uint64_t pp = mpz_get_ui(p.get_mpz_t());
        uint64_t residues = 0;
        for (uint64_t x = 1; x < pp; ++x)
            if (legendre(x, p) == LegendreValue::PlusOne) ++residues;
        CHECK(residues == (pp - 1) / 2);
    }
    // legendre(x, p) = legendre(x mod p, p)
    Rng rng2(12);
    for (int trial = 0; trial < 50; ++trial) {
        Int p = gen_prime(8, rng2);
        Int x = rng2.uniform_bits(32);
        CHECK(legendre(x, p) == legendre(x % p, p));
    }
}

TEST_CASE("jacobi examples") {
    Modulus m = M15();
    CHECK(jacobi(2, m) == LegendreValue::PlusOne); // (-1)*(-1)
    CHECK(jacobi(4, m) == LegendreValue::PlusOne);
    CHECK(jacobi(5, m) == LegendreValue::Zero);
}

TEST_CASE("is_qr examples and jacobi one-way implication") {
    Modulus m = M15();
    CHECK(is_qr(4, m));
    CHECK_FALSE(is_qr(2, m));
    CHECK_FALSE(is_qr(10, m));
    // jacobi +1 does not imply QR: x=2 mod 15 is the witness
    CHECK(jacobi(2, m) == LegendreValue::PlusOne);
    CHECK_FALSE(is_qr(2, m));
    // but QR always implies jacobi +1
    for (const auto& q : enumerate_qr(m))
        CHECK(jacobi(q, m) == LegendreValue::PlusOne);
}

TEST_CASE("sqrt_mod_prime") {
    auto r = sqrt_mod_prime(2, 7);
    REQUIRE(r.size() == 2);
    CHECK(r[0] == 3);
    CHECK(r[1] == 4);
    CHECK(sqrt_mod_prime(0, 7) == std::vector<Int>{0});
    CHECK(sqrt_mod_prime(3, 7).empty());

    // square then root is the identity on residues, both prime branches
    Rng rng(5);
    for (int trial = 0; trial < 60; ++trial) {
        Int p = gen_prime(16, rng); // mixes p=1 and p=3 mod 4
        Int x = rng.uniform_below(p);
        Int sq = x * x % p;
        auto roots = sqrt_mod_prime(sq, p);
        REQUIRE(!roots.empty());
        bool hit = false;
        for (const auto& root : roots) {
            CHECK(root * root % p == sq);
            if (root == x || root == p - x) hit = true;
        }
        CHECK(hit);
    }
}

TEST_CASE("crt_combine") {
    CHECK(crt_combine({{2, 3}, {3, 5}}) == 8);
    CHECK(oracle::crt_scan({{2, 3}, {3, 5}}) == 8);
    CHECK(crt_combine({{0, 3}, {0, 5}}) == 0);
    CHECK(crt_combine({{1, 3}, {1, 5}, {1, 7}}) == 1);
    CHECK_THROWS_AS(crt_combine({{1, 6}, {2, 4}}), ParameterError);

    // inverts componentwise reduction
    Rng rng(9);
    for (int trial = 0; trial < 40; ++trial) {
        Int p1 = gen_prime(10, rng), p2 = gen_prime(11, rng), p3 = gen_prime(12, rng);
        Int prod = p1 * p2 * p3;
        Int x = rng.uniform_below(prod);
        CHECK(crt_combine({{x % p1, p1}, {x % p2, p2}, {x % p3, p3}}) == x);
    }
}

TEST_CASE("enumerate_qr against full scan") {
    CHECK(enumerate_qr(M15()) == std::vector<Int>{1, 4});
    CHECK(enumerate_qr(M21()) == std::vector<Int>{1, 4, 16});

    Modulus m = Modulus::from_factors({3, 5, 7, 11, 13});
    auto qrs = enumerate_qr(m);
    auto expected = oracle::qr_scan(mpz_get_ui(m.value.get_mpz_t()));
    REQUIRE(qrs.size() == expected.size());
    for (size_t i = 0; i < qrs.size(); ++i) CHECK(qrs[i] == expected[i]);

    NumTheoryLimits tight;
    tight.qr_enum_bound = 100;
    CHECK_THROWS_AS(enumerate_qr(m, tight), CapabilityError);
}

TEST_CASE("QR subgroup closure") {
    for (auto m : {M15(), M21(), Modulus::from_factors({5, 7, 11})}) {
        auto qrs = enumerate_qr(m);
        for (const auto& a : qrs)
            for (const auto& b : qrs) CHECK(is_qr(a * b % m.value, m));
    }
}

TEST_CASE("poly_roots_mod_prime scan path") {
    // x^2 - 1 mod 7
    CHECK(poly_roots_mod_prime({-1, 0, 1}, 7) == std::vector<Int>{1, 6});
    // x^2 + 1 mod 7
    CHECK(poly_roots_mod_prime({1, 0, 1}, 7).empty());
    // 2x + 3 mod 5
    CHECK(poly_roots_mod_prime({3, 2}, 5) == std::vector<Int>{1});
    CHECK_THROWS_AS(poly_roots_mod_prime({0, 0}, 7), ParameterError);
    CHECK_THROWS_AS(poly_roots_mod_prime({7, 14}, 7), ParameterError);
}

TEST_CASE("poly_roots_mod_prime splitting path matches scan") {
    NumTheoryLimits force_split;
    force_split.root_scan_bound = 2; // every prime takes the gcd route
    Rng rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        Int p = gen_prime(12, rng);
        uint64_t pp = mpz_get_ui(p.get_mpz_t());
        std::vector<Int> coeffs;
        std::vector<uint64_t> coeffs_u;
        int deg = 2 + static_cast<int>(rng.next_u64() % 4);
        for (int i = 0; i <= deg; ++i) {
            Int c = rng.uniform_below(p);
            coeffs.push_back(c);
            coeffs_u.push_back(mpz_get_ui(c.get_mpz_t()));
        }
        if (coeffs.back() == 0) { coeffs.back() = 1; coeffs_u.back() = 1; }
        auto fast = poly_roots_mod_prime(coeffs, p, force_split);
        auto slow = oracle::roots_scan(coeffs_u, pp);
        REQUIRE(fast.size() == slow.size());
        for (size_t i = 0; i < fast.size(); ++i) CHECK(fast[i] == slow[i]);
    }
    // a polynomial that splits completely: product of distinct linears
    Int p = gen_prime(14, rng);
    // (x-1)(x-2)(x-3) = x^3 - 6x^2 + 11x - 6
    auto roots = poly_roots_mod_prime({-6, 11, -6, 1}, p, force_split);
    CHECK(roots == std::vector<Int>{1, 2, 3});
}

TEST_CASE("poly_roots_mod_composite") {
    Modulus m15 = M15();
    CHECK(poly_roots_mod_composite({-4, 0, 1}, m15) ==
          std::vector<Int>{2, 7, 8, 13});
    CHECK(poly_roots_mod_composite({-3, 1}, m15) == std::vector<Int>{3});
    CHECK(poly_roots_mod_composite({1, 0, 1}, m15).empty());

    // agreement with exhaustive scan over Z_M on random instances
    Rng rng(77);
    std::vector<Modulus> mods = {M15(), M21(), Modulus::from_factors({5, 7, 11}),
                                 Modulus::from_factors({11, 13, 17})};
    for (const auto& m : mods) {
        uint64_t mm = mpz_get_ui(m.value.get_mpz_t());
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<Int> coeffs;
            std::vector<uint64_t> coeffs_u;
            int deg = 1 + static_cast<int>(rng.next_u64() % 4);
            for (int i = 0; i <= deg; ++i) {
                Int c = rng.uniform_below(m.value);
                coeffs.push_back(c);
                coeffs_u.push_back(mpz_get_ui(c.get_mpz_t()));
            }
            if (coeffs.back() == 0) { coeffs.back() = 1; coeffs_u.back() = 1; }
            auto fast = poly_roots_mod_composite(coeffs, m);
            auto slow = oracle::roots_scan(coeffs_u, mm);
            REQUIRE(fast.size() == slow.size());
            for (size_t i = 0; i < fast.size(); ++i) CHECK(fast[i] == slow[i]);
        }
    }

    NumTheoryLimits tight;
    tight.crt_root_cap = 2;
    CHECK_THROWS_AS(poly_roots_mod_composite({-4, 0, 1}, m15, tight),
                    CapabilityError);
}

TEST_CASE("modulus validation") {
    CHECK_THROWS_AS(Modulus::from_factors({4, 5}), ParameterError);
    CHECK_THROWS_AS(Modulus::from_factors({3, 3}), ParameterError);
    CHECK_THROWS_AS(Modulus::from_factors({9, 5}), ParameterError);
    CHECK_THROWS_AS(Modulus::from_factors({}), ParameterError);
    CHECK(M15().enc_width() == 1);
}
