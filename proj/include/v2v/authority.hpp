#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "v2v/codec.hpp"
#include "v2v/polyalg.hpp"

namespace v2v {

enum class Profile { Toy, Demo };
enum class BlacklistMode { LiteralDivisibility, ShareComparison };
enum class VoteKind { Exit, Vote };

// Prime field hosting every cluster polynomial (2^127 - 1).
const Int& cluster_field_prime();

struct ClassDef {
    int id = 0;
    std::vector<Int> primes; // b factors of M, disjoint across classes
};

struct SystemParams {
    Modulus m;
    Key256 master_key{};
    std::vector<ClassDef> classes;
    BiPoly poly; // the secret bivariate P
    BroadcastSecrets secrets;
    Profile profile = Profile::Toy;
    unsigned u = 0, b = 0, d = 0, q = 0;
    unsigned collusion_threshold = 0; // n'
    // Homomorphic variant: global tid pool with pairwise-QR sums.
    std::vector<Int> qr_pool;
    NumTheoryLimits limits;
};

struct Credentials {
    Int tid;
    UniPoly share; // P(tid, .), mod M
    int class_id = 0;
    std::vector<Int> class_primes;
    BroadcastSecrets secrets;
    // Published x-free row of P; Generic family only (used by the
    // literal-divisibility blacklist identification mode).
    std::optional<UniPoly> y_free_part;
};

struct BlacklistEntry {
    Int tid;
    BlacklistMode mode = BlacklistMode::ShareComparison;
    std::optional<UniPoly> share_row; // present iff ShareComparison
};

struct ClusterState {
    Int id;
    BiPoly poly; // over cluster_field_prime(), degrees (w-1, l-1)
    std::vector<Int> founder_tids;
    unsigned e = 0, w = 0, l = 0;
    unsigned epochs_used = 0; // token epochs consumed, <= l
    uint64_t last_t = 0;
    bool alive = true;
    std::set<Int> dissolution_voters;
};

struct MembershipIssue {
    Int cluster_id;
    unsigned w = 0, l = 0;
    Bytes xuth;                      // PRP(rand, c_(i,vj))
    Int h_c;                         // H(rand, c ^ t)
    std::vector<Bytes> masked_share; // l coefficients, 16 bytes each, XOR-masked
};

struct IdentifyResult {
    // Set when the QR root is unique, or when several QR roots exist but
    // exactly one belongs to an enrolled vehicle.
    std::optional<Int> tid;
    // Raw QR-root count; values > 1 are uniqueness violations worth reporting.
    unsigned qr_root_count = 0;
};

class Authority {
public:
    Authority(SystemParams params, uint64_t seed);

    static SystemParams setup(unsigned u, unsigned b, unsigned prime_bits,
                              unsigned d, unsigned q, PolyFamily family,
                              uint64_t seed, Profile profile = Profile::Toy);

    const SystemParams& params() const { return params_; }

    // Hook for the step-1 vehicle authentication mechanism. Default accepts
    // everything and records an audit line.
    void set_auth_oracle(std::function<bool(const Bytes&)> oracle);
    const std::vector<std::string>& audit_log() const { return audit_log_; }

    void set_blacklist_mode(BlacklistMode mode) { blacklist_mode_ = mode; }

    Credentials provision(const Bytes& pid);
    bool is_provisioned(const Bytes& pid) const;

    IdentifyResult identify(const Int& pseudonym, const Int& eno) const;

    BlacklistEntry blacklist(const Int& tid);
    Credentials rejoin(const BlacklistEntry& entry);
    std::vector<BlacklistEntry> bad_list() const;

    Int form_cluster(const std::vector<Int>& cfms, uint64_t t, unsigned e,
                     unsigned w, unsigned l);
    MembershipIssue issue_membership(const Int& cfm, const Int& cluster_id,
                                     uint64_t t);
    // true while the cluster stays alive
    bool dissolution_vote(const Int& cluster_id, const Int& founder_tid,
                          VoteKind kind);
    void advance_cluster_epoch(const Int& cluster_id, uint64_t new_t);

    const ClusterState& cluster(const Int& cluster_id) const;
    // Direct evaluation P_i(0, c ^ t): the oracle member interpolations are
    // checked against.
    Int cluster_rand(const Int& cluster_id, uint64_t t) const;

    // Line-delimited public records (consumed by vehicles and the CLI).
    std::string export_bad_list() const;
    std::string export_cluster_list() const;
    static std::vector<BlacklistEntry> parse_bad_list(const std::string& text,
                                                      const Int& M);

    BroadcastSecrets current_secrets(uint64_t now_ms) const;

private:
    Int derive_tid(const Bytes& prp_block, const Key256& key) const;
    Int tid_free(Int candidate_seed_tid) const;

    SystemParams params_;
    mutable Rng rng_;
    BlacklistMode blacklist_mode_ = BlacklistMode::ShareComparison;
    std::function<bool(const Bytes&)> auth_oracle_;
    std::vector<std::string> audit_log_;

    std::map<Bytes, Credentials> by_pid_;
    std::map<Int, Bytes> pid_by_tid_;
    std::map<Int, BlacklistEntry> bad_;
    std::map<Int, ClusterState> clusters_;
    std::vector<Int> qr_list_; // Toy profile: cached ordered QR_M
};

// 16-byte XOR mask from a mod-M value (low 128 bits, big-endian); used for
// cluster share masking on both sides.
Bytes share_mask(const Int& c_val);
Bytes apply_mask(const Bytes& data, const Bytes& mask);

// PRP block encoding of a mod-M value, zero-padded to a 16-byte multiple.
Bytes prp_block_of(const Int& value, const Int& M);

} // namespace v2v
