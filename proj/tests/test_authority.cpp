#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <iostream>
#include <set>

#include "v2v/authority.hpp"

using namespace v2v;

namespace {
Bytes pid(const std::string& s) { return Bytes(s.begin(), s.end()); }

Int u64_int(uint64_t v) { return Int(static_cast<unsigned long>(v)); }
} // namespace

TEST_CASE("setup builds disjoint classes") {
    SystemParams p = Authority::setup(2, 2, 8, 3, 3, PolyFamily::Squared, 1);
    CHECK(p.m.factors.size() == 4);
    CHECK(p.classes.size() == 2);
    CHECK(p.classes[0].primes.size() == 2);
    for (const auto& a : p.classes[0].primes)
        for (const auto& b : p.classes[1].primes) CHECK(a != b);

    SystemParams p2 = Authority::setup(2, 2, 8, 3, 3, PolyFamily::Squared, 1);
    CHECK(p.m.value == p2.m.value);
    CHECK(p.poly.coeffs == p2.poly.coeffs);
    CHECK(p.master_key == p2.master_key);

    CHECK_THROWS_AS(Authority::setup(0, 2, 8, 3, 3, PolyFamily::Squared, 1),
                    ParameterError);
    CHECK_THROWS_AS(Authority::setup(2, 2, 8, 1, 3, PolyFamily::Squared, 1),
                    ParameterError);
}

TEST_CASE("provision is deterministic and lands in QR_M") {
    for (auto profile : {Profile::Toy, Profile::Demo}) {
        unsigned bits = profile == Profile::Toy ? 5 : 16;
        SystemParams p =
            Authority::setup(2, 2, bits, 3, 3, PolyFamily::Squared, 3, profile);
        Authority aa(p, 99);
        Credentials c1 = aa.provision(pid("car-1"));
        CHECK(is_qr(c1.tid, p.m));
        CHECK(c1.share.modulus == p.m.value);
        CHECK(c1.class_primes.size() == 2);
        CHECK_THROWS_AS(aa.provision(pid("car-1")), ParameterError);

        // fresh world, same pid, same tid
        Authority aa2(p, 99);
        CHECK(aa2.provision(pid("car-1")).tid == c1.tid);

        Credentials c2 = aa.provision(pid("car-2"));
        CHECK(c2.tid != c1.tid);
    }
}

TEST_CASE("distinct pids get distinct tids at toy scale") {
    SystemParams p = Authority::setup(1, 2, 6, 3, 3, PolyFamily::Squared, 5);
    Authority aa(p, 5);
    std::set<Int> tids;
    for (int i = 0; i < 20; ++i) {
        Credentials c = aa.provision(pid("vehicle-" + std::to_string(i)));
        CHECK(tids.insert(c.tid).second); // collisions resolved by probing
    }
}

TEST_CASE("identify round-trips honest pseudonyms, all families") {
    // uniqueness of the QR root is measured, not assumed: whenever the result
    // is unique it must name the true sender, and ambiguity is counted
    for (auto family :
         {PolyFamily::Squared, PolyFamily::Generic, PolyFamily::Homomorphic}) {
        // the homomorphic tid pool thins out fast as the prime count grows;
        // two larger primes keep it big enough for four vehicles
        SystemParams p = family == PolyFamily::Homomorphic
                             ? Authority::setup(1, 2, 8, 3, 3, family, 7)
                             : Authority::setup(2, 2, 6, 3, 3, family, 7);
        Authority aa(p, 7);
        std::vector<Credentials> creds;
        for (int i = 0; i < 4; ++i)
            creds.push_back(aa.provision(pid("v" + std::to_string(i))));
        Rng rng(17);
        int violations = 0;
        const int trials = 100;
        for (int trial = 0; trial < trials; ++trial) {
            const Credentials& c = creds[trial % creds.size()];
            Int eno = rng.uniform_below(p.m.value);
            Int pseudonym = eval_uni(c.share, eno);
            IdentifyResult r = aa.identify(pseudonym, eno);
            REQUIRE(r.tid.has_value());
            CHECK(*r.tid == c.tid);
            if (r.qr_root_count > 1) ++violations;
        }
        std::cout << "identify family " << static_cast<int>(family)
                  << ": uniqueness violations " << violations << "/" << trials
                  << "\n";
    }
}

TEST_CASE("identify is exact for polynomials linear in x") {
    SystemParams p = Authority::setup(2, 2, 6, 2, 3, PolyFamily::Generic, 41);
    Authority aa(p, 41);
    std::vector<Credentials> creds;
    for (int i = 0; i < 4; ++i)
        creds.push_back(aa.provision(pid("lv" + std::to_string(i))));
    Rng rng(43);
    UniPoly x_row(p.poly.coeffs[1], p.m.value);
    for (int trial = 0; trial < 200; ++trial) {
        const Credentials& c = creds[trial % creds.size()];
        Int eno = rng.uniform_below(p.m.value);
        // uniqueness needs the x coefficient invertible at this eno
        Int g;
        Int a = eval_uni(x_row, eno);
        mpz_gcd(g.get_mpz_t(), a.get_mpz_t(), p.m.value.get_mpz_t());
        if (g != 1) continue;
        Int pseudonym = eval_uni(c.share, eno);
        IdentifyResult r = aa.identify(pseudonym, eno);
        REQUIRE(r.tid.has_value());
        CHECK(*r.tid == c.tid);
        CHECK(r.qr_root_count == 1);
    }
}

TEST_CASE("identify rejects unrelated values at roughly QR density") {
    SystemParams p = Authority::setup(2, 2, 6, 3, 3, PolyFamily::Squared, 9);
    Authority aa(p, 9);
    aa.provision(pid("a"));
    Rng rng(23);
    int found = 0;
    const int trials = 300;
    for (int i = 0; i < trials; ++i) {
        Int r = rng.uniform_below(p.m.value);
        Int eno = rng.uniform_below(p.m.value);
        if (aa.identify(r, eno).tid) ++found;
    }
    // random values rarely correspond to a unique QR root; the bound is loose
    CHECK(found < trials / 2);
}

TEST_CASE("blacklist and rejoin") {
    SystemParams p = Authority::setup(2, 2, 6, 2, 3, PolyFamily::Generic, 11);
    Authority aa(p, 11);
    Credentials c = aa.provision(pid("rogue"));
    BlacklistEntry entry = aa.blacklist(c.tid);
    CHECK(entry.mode == BlacklistMode::ShareComparison);
    REQUIRE(entry.share_row.has_value());
    CHECK(entry.share_row->coeffs == c.share.coeffs);

    // idempotent
    BlacklistEntry again = aa.blacklist(c.tid);
    CHECK(again.tid == entry.tid);
    CHECK(aa.bad_list().size() == 1);

    CHECK_THROWS_AS(aa.blacklist(Int(424242)), ParameterError);

    Credentials fresh = aa.rejoin(entry);
    CHECK(fresh.tid != c.tid);
    CHECK(is_qr(fresh.tid, p.m));
    // rejoined vehicle identifies to the new tid
    Int eno = Int(12345) % p.m.value;
    Int pseudonym = eval_uni(fresh.share, eno);
    IdentifyResult r = aa.identify(pseudonym, eno);
    REQUIRE(r.tid.has_value());
    CHECK(*r.tid == fresh.tid);
    // old tid stays listed
    CHECK(aa.bad_list().size() == 1);
    CHECK(aa.bad_list()[0].tid == c.tid);

    CHECK_THROWS_AS(
        aa.rejoin(BlacklistEntry{Int(5), BlacklistMode::ShareComparison, {}}),
        ParameterError);
}

TEST_CASE("bad list export and parse round trip") {
    SystemParams p = Authority::setup(1, 2, 6, 3, 3, PolyFamily::Squared, 13);
    Authority aa(p, 13);
    Credentials a = aa.provision(pid("a"));
    Credentials b = aa.provision(pid("b"));
    aa.blacklist(a.tid);
    aa.blacklist(b.tid);
    std::string text = aa.export_bad_list();
    auto parsed = Authority::parse_bad_list(text, p.m.value);
    REQUIRE(parsed.size() == 2);
    for (const auto& entry : parsed) {
        CHECK((entry.tid == a.tid || entry.tid == b.tid));
        CHECK(entry.mode == BlacklistMode::ShareComparison);
        REQUIRE(entry.share_row.has_value());
        const Credentials& src = entry.tid == a.tid ? a : b;
        CHECK(entry.share_row->coeffs == src.share.coeffs);
    }
}

TEST_CASE("homomorphic pool sums stay QR") {
    SystemParams p = Authority::setup(1, 2, 5, 3, 3, PolyFamily::Homomorphic, 21);
    REQUIRE(p.qr_pool.size() >= 2);
    for (size_t i = 0; i < p.qr_pool.size(); ++i) {
        CHECK(is_qr(p.qr_pool[i], p.m));
        for (size_t j = i + 1; j < p.qr_pool.size(); ++j)
            CHECK(is_qr((p.qr_pool[i] + p.qr_pool[j]) % p.m.value, p.m));
    }
}

TEST_CASE("per-prime residue-sum count meets the (p-3)/4 bound") {
    // for x in QR_p, at least (p-3)/4 residues y keep x+y in QR_p
    Rng rng(31);
    for (int trial = 0; trial < 4; ++trial) {
        Int p = gen_prime(7, rng);
        uint64_t pp = mpz_get_ui(p.get_mpz_t());
        std::vector<uint64_t> qrs;
        for (uint64_t x = 1; x < pp; ++x)
            if (legendre(x, p) == LegendreValue::PlusOne) qrs.push_back(x);
        for (uint64_t x : qrs) {
            uint64_t count = 0;
            for (uint64_t y : qrs) {
                uint64_t s = (x + y) % pp;
                if (s != 0 && legendre(s, p) == LegendreValue::PlusOne) ++count;
            }
            CHECK(count >= (pp - 3) / 4);
        }
    }
}

TEST_CASE("cluster formation and membership") {
    SystemParams p = Authority::setup(2, 2, 6, 2, 3, PolyFamily::Generic, 15);
    Authority aa(p, 15);
    std::vector<Credentials> creds;
    for (int i = 0; i < 3; ++i)
        creds.push_back(aa.provision(pid("m" + std::to_string(i))));
    uint64_t t = p.secrets.t;
    std::vector<Int> cfms;
    for (const auto& c : creds)
        cfms.push_back(eval_uni(c.share, u64_int(t) % p.m.value));

    Int cid = aa.form_cluster(cfms, t, 3, 2, 4);
    const ClusterState& cs = aa.cluster(cid);
    CHECK(cs.founder_tids.size() == 3);
    CHECK(cs.alive);

    // deterministic id for the same founders and epoch
    SystemParams p2 = Authority::setup(2, 2, 6, 2, 3, PolyFamily::Generic, 15);
    Authority aa2(p2, 15);
    for (int i = 0; i < 3; ++i) aa2.provision(pid("m" + std::to_string(i)));
    CHECK(aa2.form_cluster(cfms, t, 3, 2, 4) == cid);

    // corrupted cfm is called out by index
    std::vector<Int> badcfms = cfms;
    badcfms[1] = (badcfms[1] + 1) % p.m.value;
    try {
        aa.form_cluster(badcfms, t, 3, 2, 4);
        FAIL("expected ProtocolError");
    } catch (const ProtocolError& e) {
        CHECK(std::string(e.what()).find("index 1") != std::string::npos);
    }

    CHECK_THROWS_AS(aa.form_cluster({cfms[0]}, t, 3, 2, 4), ProtocolError);

    // membership: the unmasked share point lies on the cluster polynomial and
    // the issued authenticator matches the direct rand evaluation
    MembershipIssue q = aa.issue_membership(cfms[0], cid, t);
    CHECK(q.w == 2);
    CHECK(q.l == 4);
    Int y_m = (cid ^ u64_int(t)) % p.m.value;
    Int c_val = eval_uni(creds[0].share, y_m);
    Bytes mask = share_mask(c_val);
    std::vector<Int> coeffs;
    for (const auto& mc : q.masked_share)
        coeffs.push_back(dec_int(apply_mask(mc, mask)));
    UniPoly share(coeffs, cluster_field_prime());
    Int y_p = (cid ^ u64_int(t)) % cluster_field_prime();
    CHECK(eval_uni(share, y_p) ==
          eval_bi(cs.poly, c_val % cluster_field_prime(), y_p));

    Int rand = aa.cluster_rand(cid, t);
    CHECK(q.h_c == cluster_hash(rand, cid ^ u64_int(t), p.m.value));
    // xuth decrypts to c under the token key
    CHECK(dec_int(prp_inv(derive_key(rand), q.xuth)) == c_val);
}

TEST_CASE("cluster rand matches interpolation over member share points") {
    SystemParams p = Authority::setup(1, 2, 6, 2, 3, PolyFamily::Generic, 25);
    Authority aa(p, 25);
    std::vector<Credentials> creds;
    for (int i = 0; i < 4; ++i)
        creds.push_back(aa.provision(pid("w" + std::to_string(i))));
    uint64_t t = p.secrets.t;
    std::vector<Int> cfms;
    for (const auto& c : creds)
        cfms.push_back(eval_uni(c.share, u64_int(t) % p.m.value));
    const unsigned w = 3;
    Int cid = aa.form_cluster(cfms, t, 3, w, 4);
    Int y_p = (cid ^ u64_int(t)) % cluster_field_prime();

    std::vector<SharePoint> pts;
    for (unsigned i = 0; i < w; ++i) {
        MembershipIssue q = aa.issue_membership(cfms[i], cid, t);
        Int y_m = (cid ^ u64_int(t)) % p.m.value;
        Int c_val = eval_uni(creds[i].share, y_m);
        Bytes mask = share_mask(c_val);
        std::vector<Int> coeffs;
        for (const auto& mc : q.masked_share)
            coeffs.push_back(dec_int(apply_mask(mc, mask)));
        UniPoly share(coeffs, cluster_field_prime());
        pts.push_back({c_val % cluster_field_prime(), eval_uni(share, y_p)});
    }
    CHECK(interpolate_free_coeff(pts, cluster_field_prime()) ==
          aa.cluster_rand(cid, t));
}

TEST_CASE("cluster lifetime and dissolution") {
    SystemParams p = Authority::setup(1, 2, 6, 2, 3, PolyFamily::Generic, 35);
    Authority aa(p, 35);
    std::vector<Credentials> creds;
    for (int i = 0; i < 3; ++i)
        creds.push_back(aa.provision(pid("d" + std::to_string(i))));
    uint64_t t = p.secrets.t;
    std::vector<Int> cfms;
    for (const auto& c : creds)
        cfms.push_back(eval_uni(c.share, u64_int(t) % p.m.value));
    Int cid = aa.form_cluster(cfms, t, 3, 2, 3); // l = 3 token epochs

    aa.advance_cluster_epoch(cid, t + 1);
    aa.advance_cluster_epoch(cid, t + 2);
    CHECK(aa.cluster(cid).epochs_used == 3);
    CHECK_THROWS_AS(aa.advance_cluster_epoch(cid, t + 3), ProtocolError);

    // dissolution: two votes keep it alive, the third distinct founder ends it
    CHECK(aa.dissolution_vote(cid, creds[0].tid, VoteKind::Vote));
    CHECK(aa.dissolution_vote(cid, creds[0].tid, VoteKind::Exit)); // same founder, counted once
    CHECK(aa.dissolution_vote(cid, creds[1].tid, VoteKind::Exit));
    CHECK_FALSE(aa.dissolution_vote(cid, creds[2].tid, VoteKind::Vote));
    CHECK_THROWS_AS(aa.dissolution_vote(cid, creds[0].tid, VoteKind::Vote),
                    ProtocolError);
    CHECK_THROWS_AS(aa.issue_membership(cfms[0], cid, t), ProtocolError);
    CHECK(aa.export_cluster_list().find("dissolved") != std::string::npos);
}

TEST_CASE("dissolution rejects non-founders") {
    SystemParams p = Authority::setup(1, 2, 6, 2, 3, PolyFamily::Generic, 45);
    Authority aa(p, 45);
    std::vector<Credentials> creds;
    for (int i = 0; i < 4; ++i)
        creds.push_back(aa.provision(pid("e" + std::to_string(i))));
    uint64_t t = p.secrets.t;
    std::vector<Int> cfms;
    for (int i = 0; i < 3; ++i)
        cfms.push_back(eval_uni(creds[i].share, u64_int(t) % p.m.value));
    Int cid = aa.form_cluster(cfms, t, 3, 2, 4);
    CHECK_THROWS_AS(aa.dissolution_vote(cid, creds[3].tid, VoteKind::Vote),
                    ProtocolError);
}

TEST_CASE("auth oracle gate") {
    SystemParams p = Authority::setup(1, 2, 6, 3, 3, PolyFamily::Squared, 55);
    Authority aa(p, 55);
    aa.set_auth_oracle([](const Bytes& b) { return !b.empty() && b[0] != 'x'; });
    CHECK_THROWS_AS(aa.provision(pid("xeno")), ProtocolError);
    CHECK_NOTHROW(aa.provision(pid("ok")));
    CHECK(aa.audit_log().size() == 1);
}
