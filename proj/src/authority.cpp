#include "v2v/authority.hpp"

#include <algorithm>
#include <sstream>

namespace v2v {

const Int& cluster_field_prime() {
    static const Int p = (Int(1) << 127) - 1;
    return p;
}

Bytes share_mask(const Int& c_val) {
    Int low = c_val & ((Int(1) << 128) - 1);
    return enc_fixed(low, 16);
}

Bytes apply_mask(const Bytes& data, const Bytes& mask) {
    Bytes out = data;
    for (size_t i = 0; i < out.size(); ++i) out[i] ^= mask[i % mask.size()];
    return out;
}

Bytes prp_block_of(const Int& value, const Int& M) {
    size_t w = (((mpz_sizeinbase(M.get_mpz_t(), 2) + 7) / 8 + 15) / 16) * 16;
    return enc_fixed(value, w);
}

namespace {

// Injective 16-byte PRP input from a permanent id.
Bytes pad16(const Bytes& pid) {
    if (pid.size() <= 15) {
        Bytes out = pid;
        out.push_back(0x80);
        out.resize(16, 0);
        return out;
    }
    Bytes digest = sha256(pid);
    digest.resize(16);
    return digest;
}

std::string hex_of(const Int& x) { return x.get_str(16); }

Int int_of_hex(const std::string& s) { return Int(s, 16); }

} // namespace

SystemParams Authority::setup(unsigned u, unsigned b, unsigned prime_bits,
                              unsigned d, unsigned q, PolyFamily family,
                              uint64_t seed, Profile profile) {
    if (u < 1 || b < 1) throw ParameterError("setup: u and b must be >= 1");
    if (d < 2 || q < 2) throw ParameterError("setup: d and q must be >= 2");
    Rng rng(seed);
    unsigned j = u * b;
    std::vector<Int> primes;
    while (primes.size() < j) {
        Int p = gen_prime(prime_bits, rng);
        if (std::find(primes.begin(), primes.end(), p) == primes.end())
            primes.push_back(p);
    }
    SystemParams params;
    params.m = Modulus::from_factors(primes);
    params.u = u;
    params.b = b;
    params.d = d;
    params.q = q;
    params.profile = profile;
    params.collusion_threshold = d - 1;
    for (unsigned i = 0; i < 32; ++i)
        params.master_key[i] = static_cast<uint8_t>(rng.next_u64() & 0xff);
    for (unsigned c = 0; c < u; ++c) {
        ClassDef cd;
        cd.id = static_cast<int>(c);
        cd.primes.assign(primes.begin() + c * b, primes.begin() + (c + 1) * b);
        params.classes.push_back(std::move(cd));
    }
    params.poly = gen_bipoly(family, d, q, params.m.value, rng);
    params.secrets.t = mpz_get_ui(rng.uniform_bits(20).get_mpz_t());
    params.secrets.alpha = 1 + (rng.next_u64() % 1024);
    params.secrets.gamma_ms = 1000;
    params.secrets.last_update_ms = 0;

    if (family == PolyFamily::Homomorphic) {
        // Pool of tids whose pairwise sums stay quadratic residues, so the
        // y-binding check of the variant scheme works for any vehicle pair.
        // Built per prime (residues whose pairwise sums are again residues,
        // greedy scan from 1) and stitched together by CRT, which keeps the
        // construction independent of the size of M.
        constexpr size_t kPoolCap = 64;
        constexpr unsigned long kScanCap = 1u << 16;
        std::vector<std::vector<Int>> per_prime;
        size_t pool_n = kPoolCap;
        for (const auto& p : primes) {
            std::vector<Int> s;
            for (Int x = 1; x < p && x < kScanCap && s.size() < kPoolCap; ++x) {
                if (legendre(x, p) != LegendreValue::PlusOne) continue;
                bool ok = true;
                for (const auto& y : s) {
                    Int sum = (x + y) % p;
                    if (sum == 0 || legendre(sum, p) != LegendreValue::PlusOne) {
                        ok = false;
                        break;
                    }
                }
                if (ok) s.push_back(x);
            }
            if (s.size() < 2)
                throw CapabilityError("setup: homomorphic tid pool too small");
            pool_n = std::min(pool_n, s.size());
            per_prime.push_back(std::move(s));
        }
        for (size_t i = 0; i < pool_n; ++i) {
            std::vector<std::pair<Int, Int>> residues;
            for (size_t k = 0; k < primes.size(); ++k)
                residues.emplace_back(per_prime[k][i], primes[k]);
            params.qr_pool.push_back(crt_combine(residues));
        }
    }
    return params;
}

Authority::Authority(SystemParams params, uint64_t seed)
    : params_(std::move(params)), rng_(seed) {
    auth_oracle_ = [](const Bytes&) { return true; };
    if (params_.profile == Profile::Toy &&
        params_.poly.family != PolyFamily::Homomorphic) {
        qr_list_ = enumerate_qr(params_.m, params_.limits);
    }
}

void Authority::set_auth_oracle(std::function<bool(const Bytes&)> oracle) {
    auth_oracle_ = std::move(oracle);
}

Int Authority::derive_tid(const Bytes& prp_block, const Key256& key) const {
    Bytes out = prp(key, prp_block);
    Int base = dec_int(out);
    const std::vector<Int>* pool = nullptr;
    if (params_.poly.family == PolyFamily::Homomorphic)
        pool = &params_.qr_pool;
    else if (params_.profile == Profile::Toy)
        pool = &qr_list_;

    auto in_use = [this](const Int& tid) {
        return pid_by_tid_.count(tid) > 0 || bad_.count(tid) > 0;
    };

    if (pool) {
        size_t n = pool->size();
        Int idx0 = base % static_cast<unsigned long>(n);
        size_t start = mpz_get_ui(idx0.get_mpz_t());
        for (size_t probe = 0; probe < n; ++probe) {
            const Int& cand = (*pool)[(start + probe) % n];
            if (!in_use(cand)) return cand;
        }
        throw CapabilityError("derive_tid: tid pool exhausted");
    }

    // Demo profile: square a hash of the PRP output (uniform over QR_M
    // without enumerating it).
    for (uint64_t probe = 0;; ++probe) {
        Int cand = hash_to_zm(0x05, {out, enc_u64(probe)}, params_.m.value);
        Int g;
        mpz_gcd(g.get_mpz_t(), cand.get_mpz_t(), params_.m.value.get_mpz_t());
        if (g != 1) continue;
        Int tid = cand * cand % params_.m.value;
        if (!in_use(tid)) return tid;
    }
}

Credentials Authority::provision(const Bytes& pid) {
    if (!auth_oracle_(pid)) throw ProtocolError("provision: authentication failed");
    audit_log_.push_back("auth ok pid=" + hex_of(dec_int(pid.empty() ? Bytes{0} : pid)));
    auto it = by_pid_.find(pid);
    if (it != by_pid_.end() && bad_.count(it->second.tid) == 0)
        throw ParameterError("provision: pid already provisioned");

    Int tid = derive_tid(pad16(pid), params_.master_key);
    Credentials creds;
    creds.tid = tid;
    creds.share = partial_x(params_.poly, tid);
    int class_id = static_cast<int>(mpz_get_ui(
        rng_.uniform_below(static_cast<unsigned long>(params_.u)).get_mpz_t()));
    creds.class_id = class_id;
    creds.class_primes = params_.classes[class_id].primes;
    creds.secrets = params_.secrets;
    if (params_.poly.family == PolyFamily::Generic)
        creds.y_free_part = UniPoly(params_.poly.coeffs[0], params_.m.value);
    by_pid_[pid] = creds;
    pid_by_tid_[tid] = pid;
    return creds;
}

bool Authority::is_provisioned(const Bytes& pid) const {
    return by_pid_.count(pid) > 0;
}

IdentifyResult Authority::identify(const Int& pseudonym, const Int& eno) const {
    std::vector<Int> roots;
    if (params_.poly.family == PolyFamily::Squared) {
        // pseudonym = R(tid, eno)^2: lift the square roots per prime, CRT
        // over the sign choices, then solve R(., eno) = r for each lift.
        std::vector<std::vector<Int>> per_prime;
        for (const auto& p : params_.m.factors) {
            auto rs = sqrt_mod_prime(pseudonym, p);
            if (rs.empty()) return {};
            per_prime.push_back(std::move(rs));
        }
        BiPoly inner;
        inner.family = PolyFamily::Generic;
        inner.coeffs = params_.poly.coeffs;
        inner.modulus = params_.m.value;
        std::vector<size_t> idx(per_prime.size(), 0);
        for (;;) {
            std::vector<std::pair<Int, Int>> residues;
            for (size_t i = 0; i < per_prime.size(); ++i)
                residues.emplace_back(per_prime[i][idx[i]], params_.m.factors[i]);
            Int r = crt_combine(residues);
            UniPoly f = partial_y(inner, eno);
            std::vector<Int> coeffs = f.coeffs;
            if (coeffs.empty()) coeffs.resize(1, 0);
            coeffs[0] = (coeffs[0] - r) % params_.m.value;
            if (coeffs[0] < 0) coeffs[0] += params_.m.value;
            bool all_zero = std::all_of(coeffs.begin(), coeffs.end(),
                                        [](const Int& c) { return c == 0; });
            if (!all_zero) {
                auto rr = poly_roots_mod_composite(coeffs, params_.m, params_.limits);
                roots.insert(roots.end(), rr.begin(), rr.end());
            }
            size_t i = 0;
            while (i < idx.size() && ++idx[i] == per_prime[i].size()) idx[i++] = 0;
            if (i == idx.size()) break;
        }
    } else {
        UniPoly f = partial_y(params_.poly, eno);
        std::vector<Int> coeffs = f.coeffs;
        if (coeffs.empty()) coeffs.resize(1, 0);
        coeffs[0] = (coeffs[0] - pseudonym) % params_.m.value;
        if (coeffs[0] < 0) coeffs[0] += params_.m.value;
        if (std::all_of(coeffs.begin(), coeffs.end(),
                        [](const Int& c) { return c == 0; }))
            return {};
        roots = poly_roots_mod_composite(coeffs, params_.m, params_.limits);
    }

    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
    IdentifyResult result;
    std::vector<Int> qr_roots;
    for (const auto& r : roots)
        if (is_qr(r, params_.m)) qr_roots.push_back(r);
    result.qr_root_count = static_cast<unsigned>(qr_roots.size());
    if (qr_roots.size() == 1) {
        result.tid = qr_roots[0];
        return result;
    }
    // Multiple QR roots (qr_root_count records the uniqueness violation);
    // fall back to the enrollment table to pick out the real sender.
    std::optional<Int> enrolled;
    unsigned enrolled_hits = 0;
    for (const auto& r : qr_roots) {
        if (pid_by_tid_.count(r)) {
            ++enrolled_hits;
            enrolled = r;
        }
    }
    if (enrolled_hits == 1) result.tid = enrolled;
    return result;
}

BlacklistEntry Authority::blacklist(const Int& tid) {
    auto existing = bad_.find(tid);
    if (existing != bad_.end()) return existing->second;
    auto pit = pid_by_tid_.find(tid);
    if (pit == pid_by_tid_.end()) throw ParameterError("blacklist: unknown tid");
    BlacklistEntry entry;
    entry.tid = tid;
    entry.mode = blacklist_mode_;
    if (blacklist_mode_ == BlacklistMode::ShareComparison)
        entry.share_row = by_pid_.at(pit->second).share;
    bad_[tid] = entry;
    return entry;
}

Credentials Authority::rejoin(const BlacklistEntry& entry) {
    if (bad_.count(entry.tid) == 0)
        throw ParameterError("rejoin: tid is not blacklisted");
    auto pit = pid_by_tid_.find(entry.tid);
    if (pit == pid_by_tid_.end()) throw ParameterError("rejoin: unknown tid");
    Bytes pid = pit->second;

    // k' = PRP(k, k); the old tid seeds the fresh index.
    Bytes kb(params_.master_key.begin(), params_.master_key.end());
    Bytes kprime_raw = prp(params_.master_key, kb);
    Key256 kprime;
    std::copy(kprime_raw.begin(), kprime_raw.end(), kprime.begin());
    Int tid = derive_tid(prp_block_of(entry.tid, params_.m.value), kprime);

    Credentials creds = by_pid_.at(pid);
    creds.tid = tid;
    creds.share = partial_x(params_.poly, tid);
    creds.secrets = params_.secrets;
    by_pid_[pid] = creds;
    pid_by_tid_[tid] = pid;
    return creds;
}

std::vector<BlacklistEntry> Authority::bad_list() const {
    std::vector<BlacklistEntry> out;
    for (const auto& [tid, entry] : bad_) out.push_back(entry);
    return out;
}

Int Authority::form_cluster(const std::vector<Int>& cfms, uint64_t t, unsigned e,
                            unsigned w, unsigned l) {
    if (w < 2 || l < 2) throw ParameterError("form_cluster: w and l must be >= 2");
    if (cfms.size() < e)
        throw ProtocolError("form_cluster: fewer cfms than founding threshold");
    Int eno = Int(static_cast<unsigned long>(t)) % params_.m.value;
    std::vector<Int> tids;
    Int tid_sum = 0;
    for (size_t i = 0; i < cfms.size(); ++i) {
        IdentifyResult id = identify(cfms[i], eno);
        if (!id.tid)
            throw ProtocolError("form_cluster: cfm at index " + std::to_string(i) +
                                " failed identification");
        tids.push_back(*id.tid);
        tid_sum += *id.tid;
    }
    Int cid = hash_to_zm(0x04, {enc_int(tid_sum ^ Int(static_cast<unsigned long>(t)))},
                         params_.m.value);
    ClusterState state;
    state.id = cid;
    state.poly = gen_bipoly(PolyFamily::Generic, w, l, cluster_field_prime(), rng_);
    state.founder_tids = std::move(tids);
    state.e = e;
    state.w = w;
    state.l = l;
    state.epochs_used = 1;
    state.last_t = t;
    clusters_[cid] = std::move(state);
    return cid;
}

const ClusterState& Authority::cluster(const Int& cluster_id) const {
    auto it = clusters_.find(cluster_id);
    if (it == clusters_.end()) throw ParameterError("cluster: unknown id");
    return it->second;
}

Int Authority::cluster_rand(const Int& cluster_id, uint64_t t) const {
    const ClusterState& c = cluster(cluster_id);
    Int y = (c.id ^ Int(static_cast<unsigned long>(t))) % cluster_field_prime();
    return eval_bi(c.poly, 0, y);
}

MembershipIssue Authority::issue_membership(const Int& cfm, const Int& cluster_id,
                                            uint64_t t) {
    auto it = clusters_.find(cluster_id);
    if (it == clusters_.end()) throw ParameterError("issue_membership: unknown cluster");
    ClusterState& c = it->second;
    if (!c.alive) throw ProtocolError("issue_membership: cluster dissolved");
    if (c.epochs_used > c.l)
        throw ProtocolError("issue_membership: cluster lifetime exhausted");

    Int eno = Int(static_cast<unsigned long>(t)) % params_.m.value;
    IdentifyResult id = identify(cfm, eno);
    if (!id.tid) throw ProtocolError("issue_membership: requester not identified");
    UniPoly share_row = partial_x(params_.poly, *id.tid);

    Int y_m = (cluster_id ^ Int(static_cast<unsigned long>(t))) % params_.m.value;
    Int c_val = eval_uni(share_row, y_m);

    UniPoly cluster_share = partial_x(c.poly, c_val % cluster_field_prime());
    Int rand = cluster_rand(cluster_id, t);

    MembershipIssue q;
    q.cluster_id = cluster_id;
    q.w = c.w;
    q.l = c.l;
    Bytes mask = share_mask(c_val);
    std::vector<Int> coeffs = cluster_share.coeffs;
    coeffs.resize(c.l, 0);
    for (const auto& coeff : coeffs)
        q.masked_share.push_back(apply_mask(enc_fixed(coeff, 16), mask));
    q.xuth = prp(derive_key(rand), prp_block_of(c_val, params_.m.value));
    q.h_c = cluster_hash(rand, cluster_id ^ Int(static_cast<unsigned long>(t)),
                         params_.m.value);
    return q;
}

bool Authority::dissolution_vote(const Int& cluster_id, const Int& founder_tid,
                                 VoteKind) {
    auto it = clusters_.find(cluster_id);
    if (it == clusters_.end()) throw ParameterError("dissolution_vote: unknown cluster");
    ClusterState& c = it->second;
    if (!c.alive) throw ProtocolError("dissolution_vote: cluster already dissolved");
    if (std::find(c.founder_tids.begin(), c.founder_tids.end(), founder_tid) ==
        c.founder_tids.end())
        throw ProtocolError("dissolution_vote: not a founding member");
    c.dissolution_voters.insert(founder_tid);
    if (c.dissolution_voters.size() >= c.e) c.alive = false;
    return c.alive;
}

void Authority::advance_cluster_epoch(const Int& cluster_id, uint64_t new_t) {
    auto it = clusters_.find(cluster_id);
    if (it == clusters_.end()) throw ParameterError("advance_cluster_epoch: unknown cluster");
    ClusterState& c = it->second;
    if (!c.alive) throw ProtocolError("advance_cluster_epoch: cluster dissolved");
    if (c.epochs_used >= c.l)
        throw ProtocolError("advance_cluster_epoch: cluster lifetime exhausted");
    ++c.epochs_used;
    c.last_t = new_t;
}

std::string Authority::export_bad_list() const {
    std::ostringstream out;
    for (const auto& [tid, entry] : bad_) {
        out << hex_of(tid) << ' '
            << (entry.mode == BlacklistMode::ShareComparison ? "share" : "literal");
        if (entry.share_row) {
            for (const auto& c : entry.share_row->coeffs) out << ' ' << hex_of(c);
        }
        out << '\n';
    }
    return out.str();
}

std::string Authority::export_cluster_list() const {
    std::ostringstream out;
    for (const auto& [cid, c] : clusters_) {
        out << hex_of(cid) << ' ' << (c.alive ? "alive" : "dissolved")
            << " epoch=" << c.epochs_used << " founders=";
        for (size_t i = 0; i < c.founder_tids.size(); ++i) {
            if (i) out << ',';
            out << hex_of(c.founder_tids[i]);
        }
        out << '\n';
    }
    return out.str();
}

std::vector<BlacklistEntry> Authority::parse_bad_list(const std::string& text,
                                                      const Int& M) {
    std::vector<BlacklistEntry> out;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string tid_hex, mode;
        fields >> tid_hex >> mode;
        BlacklistEntry entry;
        entry.tid = int_of_hex(tid_hex);
        entry.mode = mode == "share" ? BlacklistMode::ShareComparison
                                     : BlacklistMode::LiteralDivisibility;
        std::vector<Int> coeffs;
        std::string coeff_hex;
        while (fields >> coeff_hex) coeffs.push_back(int_of_hex(coeff_hex));
        if (entry.mode == BlacklistMode::ShareComparison)
            entry.share_row = UniPoly(std::move(coeffs), M);
        out.push_back(std::move(entry));
    }
    return out;
}

BroadcastSecrets Authority::current_secrets(uint64_t now_ms) const {
    return advance_t(params_.secrets, now_ms);
}

} // namespace v2v
