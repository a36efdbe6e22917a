#pragma once

#include "v2v/authority.hpp"

namespace v2v {

enum class Verdict {
    Accept,
    RejectBlacklisted,
    RejectIntegrity,
    RejectReplay,
    RejectNotQr,
    RejectYBinding,
};

const char* verdict_name(Verdict v);

// Per-message operation tallies (polynomial evaluations, modular
// exponentiations, hash invocations, PRP calls, interpolations).
struct OpCounters {
    uint64_t poly_evals = 0;
    uint64_t exps = 0;
    uint64_t hashes = 0;
    uint64_t prp_calls = 0;
    uint64_t interpolations = 0;
};

struct MemberRecord {
    Int cluster_id;
    Int c_val;            // c_(i,vj), mod M
    UniPoly cluster_share; // P^i_vj over the cluster field
    Int h_c;
    Bytes xuth;
    Int rand;   // current membership token
    unsigned epoch = 1;
    unsigned w = 0, l = 0;
};

// Sponsor's reply in the join choreography.
struct SponsorReply {
    Int c_xor;  // c_(i,v') ^ c_(i,vj)
    Int s_val;  // s_(i,v') over the cluster field
};

class Vehicle {
public:
    Vehicle(Credentials creds, const Int& M, bool variant_scheme = false);

    const Credentials& creds() const { return creds_; }
    const OpCounters& counters() const { return counters_; }
    void reset_counters() { counters_ = {}; }

    void set_bad_list(std::vector<BlacklistEntry> bad) { bad_ = std::move(bad); }
    // literal-divisibility identification needs the published x-free row of P and
    // only applies in the wraparound-free toy profile.
    void set_published_y_free(UniPoly row, bool wraparound_free) {
        published_y_free_ = std::move(row);
        wraparound_free_ = wraparound_free;
    }

    Envelope broadcast(const Bytes& m, uint64_t now_ms);
    Verdict verify(const Envelope& env, uint64_t now_ms);

    // Public blacklist identification predicate.
    static bool idnt(const Int& pseudonym, const BlacklistEntry& entry,
                     const Int& eno, const Int& M,
                     const UniPoly* published_y_free, bool wraparound_free,
                     OpCounters* counters = nullptr);

    void on_t_update(uint64_t new_t);
    uint64_t current_t(uint64_t now_ms) const;
    size_t replay_cache_size() const { return replay_cache_.size(); }

    Int make_cfm(uint64_t t);

    // --- cluster member protocol ---
    const MemberRecord& join_cluster(const MembershipIssue& q,
                                     const std::vector<Vehicle*>& sponsors,
                                     uint64_t t);
    void adopt_membership(const MembershipIssue& q, uint64_t t, const Int& rand);
    const MemberRecord& member_record(const Int& cluster_id) const;
    bool is_member(const Int& cluster_id) const;

    // Sponsor side of the join choreography.
    Int prove_membership(const Int& cluster_id, uint64_t t);
    SponsorReply sponsor_respond(const Int& cluster_id, const Bytes& xuth,
                                 uint64_t t);

    // Token refresh: encrypted (c, s) pair under the current token.
    Bytes make_token_update(const Int& cluster_id, uint64_t new_t);
    Int update_token(const Int& cluster_id, const std::vector<Bytes>& peer_msgs,
                     uint64_t new_t);

private:
    void sync_epoch(uint64_t now_ms);
    std::pair<Int, Int> parse_pair(const Bytes& plain) const;

    Credentials creds_;
    Int M_;
    bool variant_;
    std::set<Int> replay_cache_;
    uint64_t last_t_seen_;
    std::map<Int, MemberRecord> clusters_;
    std::vector<BlacklistEntry> bad_;
    std::optional<UniPoly> published_y_free_;
    bool wraparound_free_ = false;
    OpCounters counters_;
};

} // namespace v2v
