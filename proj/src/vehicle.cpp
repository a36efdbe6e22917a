#include "v2v/vehicle.hpp"

#include <algorithm>

namespace v2v {

const char* verdict_name(Verdict v) {
    switch (v) {
    case Verdict::Accept: return "ACCEPT";
    case Verdict::RejectBlacklisted: return "BLACKLISTED";
    case Verdict::RejectIntegrity: return "INTEGRITY";
    case Verdict::RejectReplay: return "REPLAY";
    case Verdict::RejectNotQr: return "NOT_QR";
    case Verdict::RejectYBinding: return "Y_BINDING";
    }
    return "?";
}

Vehicle::Vehicle(Credentials creds, const Int& M, bool variant_scheme)
    : creds_(std::move(creds)), M_(M), variant_(variant_scheme) {
    last_t_seen_ = creds_.secrets.t;
}

uint64_t Vehicle::current_t(uint64_t now_ms) const {
    return advance_t(creds_.secrets, now_ms).t;
}

void Vehicle::on_t_update(uint64_t new_t) {
    replay_cache_.clear();
    last_t_seen_ = new_t;
}

void Vehicle::sync_epoch(uint64_t now_ms) {
    uint64_t t = current_t(now_ms);
    if (t != last_t_seen_) on_t_update(t);
}

Envelope Vehicle::broadcast(const Bytes& m, uint64_t now_ms) {
    sync_epoch(now_ms);
    uint64_t t = last_t_seen_;
    Int eno = eno_of(t, m, M_);
    ++counters_.hashes;
    Int pseudonym = eval_uni(creds_.share, eno);
    ++counters_.poly_evals;
    Envelope env;
    env.payload = m;
    env.pseudonym = pseudonym;
    env.vno = vno_of(t, m, pseudonym, M_);
    ++counters_.hashes;
    env.sent_at = now_ms;
    return env;
}

bool Vehicle::idnt(const Int& pseudonym, const BlacklistEntry& entry,
                   const Int& eno, const Int& M,
                   const UniPoly* published_y_free, bool wraparound_free,
                   OpCounters* counters) {
    if (entry.mode == BlacklistMode::ShareComparison) {
        if (!entry.share_row)
            throw ParameterError("idnt: share-comparison entry without share row");
        if (counters) ++counters->poly_evals;
        return eval_uni(*entry.share_row, eno) == pseudonym;
    }
    // literal-divisibility divisibility test: only sound when polynomial evaluation
    // never wraps mod M.
    if (!wraparound_free || published_y_free == nullptr)
        throw CapabilityError(
            "idnt: literal-divisibility mode requires the wraparound-free toy profile");
    if (counters) ++counters->poly_evals;
    // evaluate the x-free row over the integers
    Int only_y = 0;
    for (size_t i = published_y_free->coeffs.size(); i-- > 0;)
        only_y = only_y * eno + published_y_free->coeffs[i];
    Int stripped = pseudonym - only_y;
    if (entry.tid == 0) return false;
    return mpz_divisible_p(stripped.get_mpz_t(), entry.tid.get_mpz_t()) != 0;
}

Verdict Vehicle::verify(const Envelope& env, uint64_t now_ms) {
    sync_epoch(now_ms);
    uint64_t t = last_t_seen_;
    Int eno = eno_of(t, env.payload, M_);
    ++counters_.hashes;

    // step order follows the verification pipeline: blacklist, integrity,
    // replay, residuosity
    const UniPoly* y_free =
        published_y_free_ ? &*published_y_free_ : nullptr;
    for (const auto& entry : bad_) {
        if (idnt(env.pseudonym, entry, eno, M_, y_free, wraparound_free_,
                 &counters_))
            return Verdict::RejectBlacklisted;
    }

    Int vno_check = vno_of(t, env.payload, env.pseudonym, M_);
    ++counters_.hashes;
    if (vno_check != env.vno) return Verdict::RejectIntegrity;

    if (replay_cache_.count(env.vno)) return Verdict::RejectReplay;

    if (!variant_) {
        for (const auto& p : creds_.class_primes) {
            ++counters_.exps;
            if (legendre(env.pseudonym, p) != LegendreValue::PlusOne)
                return Verdict::RejectNotQr;
        }
    } else {
        Int own = eval_uni(creds_.share, eno);
        ++counters_.poly_evals;
        Int sum = (own + env.pseudonym) % M_;
        for (const auto& p : creds_.class_primes) {
            ++counters_.exps;
            if (legendre(sum, p) != LegendreValue::PlusOne)
                return Verdict::RejectYBinding;
        }
    }

    replay_cache_.insert(env.vno);
    return Verdict::Accept;
}

Int Vehicle::make_cfm(uint64_t t) {
    ++counters_.poly_evals;
    return eval_uni(creds_.share, Int(static_cast<unsigned long>(t)) % M_);
}

bool Vehicle::is_member(const Int& cluster_id) const {
    return clusters_.count(cluster_id) > 0;
}

const MemberRecord& Vehicle::member_record(const Int& cluster_id) const {
    auto it = clusters_.find(cluster_id);
    if (it == clusters_.end()) throw ParameterError("member_record: not a member");
    return it->second;
}

namespace {

UniPoly unmask_share(const MembershipIssue& q, const Int& c_val) {
    Bytes mask = share_mask(c_val);
    std::vector<Int> coeffs;
    coeffs.reserve(q.masked_share.size());
    for (const auto& masked : q.masked_share)
        coeffs.push_back(dec_int(apply_mask(masked, mask)));
    return UniPoly(std::move(coeffs), cluster_field_prime());
}

} // namespace

void Vehicle::adopt_membership(const MembershipIssue& q, uint64_t t,
                               const Int& rand) {
    Int y_m = (q.cluster_id ^ Int(static_cast<unsigned long>(t))) % M_;
    Int c_val = eval_uni(creds_.share, y_m);
    ++counters_.poly_evals;
    MemberRecord rec;
    rec.cluster_id = q.cluster_id;
    rec.c_val = c_val;
    rec.cluster_share = unmask_share(q, c_val);
    rec.h_c = q.h_c;
    rec.xuth = q.xuth;
    rec.rand = rand;
    rec.epoch = 1;
    rec.w = q.w;
    rec.l = q.l;
    clusters_[q.cluster_id] = std::move(rec);
}

Int Vehicle::prove_membership(const Int& cluster_id, uint64_t t) {
    const MemberRecord& rec = member_record(cluster_id);
    ++counters_.hashes;
    return cluster_hash(rec.rand,
                        cluster_id ^ Int(static_cast<unsigned long>(t)), M_);
}

SponsorReply Vehicle::sponsor_respond(const Int& cluster_id, const Bytes& xuth,
                                      uint64_t t) {
    const MemberRecord& rec = member_record(cluster_id);
    Bytes block = prp_inv(derive_key(rec.rand), xuth);
    ++counters_.prp_calls;
    Int c_joiner = dec_int(block);
    Int xor_t = cluster_id ^ Int(static_cast<unsigned long>(t));
    Int s_own = eval_uni(rec.cluster_share, xor_t % cluster_field_prime());
    ++counters_.poly_evals;
    Int c_own = eval_uni(creds_.share, xor_t % M_);
    ++counters_.poly_evals;
    return SponsorReply{c_own ^ c_joiner, s_own};
}

const MemberRecord& Vehicle::join_cluster(const MembershipIssue& q,
                                          const std::vector<Vehicle*>& sponsors,
                                          uint64_t t) {
    if (sponsors.size() + 1 < q.w)
        throw ProtocolError("join_cluster: need at least w-1 sponsors");
    Int xor_t = q.cluster_id ^ Int(static_cast<unsigned long>(t));
    Int c_val = eval_uni(creds_.share, xor_t % M_);
    ++counters_.poly_evals;
    UniPoly cluster_share = unmask_share(q, c_val);

    std::vector<SharePoint> points;
    points.push_back({c_val % cluster_field_prime(),
                      eval_uni(cluster_share, xor_t % cluster_field_prime())});
    ++counters_.poly_evals;

    for (size_t i = 0; i + 1 < q.w; ++i) {
        Vehicle* sponsor = sponsors[i];
        Int h_prime = sponsor->prove_membership(q.cluster_id, t);
        if (h_prime != q.h_c)
            throw ProtocolError("join_cluster: UNTRUSTED_SPONSOR (h mismatch)");
        SponsorReply reply = sponsor->sponsor_respond(q.cluster_id, q.xuth, t);
        Int c_sponsor = reply.c_xor ^ c_val;
        points.push_back({c_sponsor % cluster_field_prime(), reply.s_val});
    }

    Int rand = interpolate_free_coeff(points, cluster_field_prime());
    ++counters_.interpolations;
    ++counters_.hashes;
    if (cluster_hash(rand, xor_t, M_) != q.h_c)
        throw ProtocolError("join_cluster: BAD_SHARES (token check failed)");

    MemberRecord rec;
    rec.cluster_id = q.cluster_id;
    rec.c_val = c_val;
    rec.cluster_share = std::move(cluster_share);
    rec.h_c = q.h_c;
    rec.xuth = q.xuth;
    rec.rand = rand;
    rec.epoch = 1;
    rec.w = q.w;
    rec.l = q.l;
    clusters_[q.cluster_id] = std::move(rec);
    return clusters_.at(q.cluster_id);
}

std::pair<Int, Int> Vehicle::parse_pair(const Bytes& plain) const {
    size_t wm = (mpz_sizeinbase(M_.get_mpz_t(), 2) + 7) / 8;
    if (plain.size() < wm + 16) throw ParameterError("parse_pair: short plaintext");
    Int c = dec_int(Bytes(plain.begin(), plain.begin() + wm));
    Int s = dec_int(Bytes(plain.begin() + wm, plain.begin() + wm + 16));
    return {c, s};
}

Bytes Vehicle::make_token_update(const Int& cluster_id, uint64_t new_t) {
    const MemberRecord& rec = member_record(cluster_id);
    Int xor_t = cluster_id ^ Int(static_cast<unsigned long>(new_t));
    Int s_new = eval_uni(rec.cluster_share, xor_t % cluster_field_prime());
    ++counters_.poly_evals;
    size_t wm = (mpz_sizeinbase(M_.get_mpz_t(), 2) + 7) / 8;
    Bytes plain = enc_fixed(rec.c_val, wm);
    Bytes s_enc = enc_fixed(s_new, 16);
    plain.insert(plain.end(), s_enc.begin(), s_enc.end());
    plain.resize(((plain.size() + 15) / 16) * 16, 0);
    ++counters_.prp_calls;
    return prp(derive_key(rec.rand), plain);
}

Int Vehicle::update_token(const Int& cluster_id,
                          const std::vector<Bytes>& peer_msgs, uint64_t new_t) {
    auto it = clusters_.find(cluster_id);
    if (it == clusters_.end()) throw ParameterError("update_token: not a member");
    MemberRecord& rec = it->second;
    if (rec.epoch >= rec.l)
        throw ProtocolError("update_token: cluster lifetime exhausted");

    Int xor_t = cluster_id ^ Int(static_cast<unsigned long>(new_t));
    std::vector<SharePoint> points;
    points.push_back({rec.c_val % cluster_field_prime(),
                      eval_uni(rec.cluster_share, xor_t % cluster_field_prime())});
    ++counters_.poly_evals;

    Key256 key = derive_key(rec.rand);
    for (const auto& msg : peer_msgs) {
        if (points.size() >= rec.w) break;
        Bytes plain = prp_inv(key, msg);
        ++counters_.prp_calls;
        auto [c, s] = parse_pair(plain);
        Int x = c % cluster_field_prime();
        bool dup = std::any_of(points.begin(), points.end(),
                               [&](const SharePoint& pt) { return pt.x_coord == x; });
        if (!dup) points.push_back({x, s});
    }
    if (points.size() < rec.w)
        throw ProtocolError("update_token: fewer than w-1 usable peer shares");

    Int rand = interpolate_free_coeff(points, cluster_field_prime());
    ++counters_.interpolations;
    rec.rand = rand;
    ++rec.epoch;
    return rand;
}

} // namespace v2v
