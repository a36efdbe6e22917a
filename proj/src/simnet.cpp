#include "v2v/simnet.hpp"

#include <algorithm>
#include <sstream>

namespace v2v {

using nlohmann::json;

namespace {

std::string hex(const Int& x) { return x.get_str(16); }

std::string profile_name(Profile p) {
    return p == Profile::Toy ? "toy" : "demo";
}

Profile profile_of(const std::string& s) {
    if (s == "toy") return Profile::Toy;
    if (s == "demo") return Profile::Demo;
    throw ParameterError("scenario: unknown profile: " + s);
}

std::string family_name(PolyFamily f) {
    switch (f) {
    case PolyFamily::Generic: return "generic";
    case PolyFamily::Squared: return "squared";
    case PolyFamily::Homomorphic: return "homomorphic";
    }
    return "?";
}

PolyFamily family_of(const std::string& s) {
    if (s == "generic") return PolyFamily::Generic;
    if (s == "squared") return PolyFamily::Squared;
    if (s == "homomorphic") return PolyFamily::Homomorphic;
    throw ParameterError("scenario: unknown polynomial family: " + s);
}

Int norm(Int x, const Int& M) {
    x %= M;
    if (x < 0) x += M;
    return x;
}

// Full coefficient-vector Lagrange interpolation mod M. Degree is the point
// count minus one; throws when a node difference is not invertible.
std::vector<Int> lagrange_coeffs(const std::vector<Int>& xs,
                                 const std::vector<Int>& vs, const Int& M) {
    size_t n = xs.size();
    std::vector<Int> acc(n, 0);
    for (size_t i = 0; i < n; ++i) {
        std::vector<Int> num{1};
        Int denom = 1;
        for (size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            std::vector<Int> next(num.size() + 1, 0);
            for (size_t k = 0; k < num.size(); ++k) {
                next[k + 1] = norm(next[k + 1] + num[k], M);
                next[k] = norm(next[k] - num[k] * xs[j], M);
            }
            num = std::move(next);
            denom = norm(denom * norm(xs[i] - xs[j], M), M);
        }
        Int dinv;
        if (mpz_invert(dinv.get_mpz_t(), denom.get_mpz_t(), M.get_mpz_t()) == 0)
            throw ProtocolError("collude: non-invertible node difference");
        Int scale = norm(vs[i] * dinv, M);
        for (size_t k = 0; k < num.size(); ++k)
            acc[k] = norm(acc[k] + num[k] * scale, M);
    }
    return acc;
}

struct ClusterView {
    Int cid;
    std::vector<size_t> members;
};

class Sim {
public:
    explicit Sim(const Scenario& sc)
        : sc_(sc),
          params_(make_params(sc)),
          aa_(params_, sc.seed + 1),
          adversary_rng_(sc.seed + 2) {
        if (sc.vehicles < 1) throw ParameterError("scenario: no vehicles");
        for (unsigned i = 0; i < sc.vehicles; ++i) {
            Bytes pid;
            std::string name = "sim-vehicle-" + std::to_string(i);
            pid.assign(name.begin(), name.end());
            vehicles_.emplace_back(aa_.provision(pid), params_.m.value,
                                   sc.variant);
        }
    }

    RunResult run() {
        emit(json{{"type", "header"}, {"scenario", sc_.to_json()}});
        std::vector<ScenarioEvent> events = sc_.events;
        std::stable_sort(events.begin(), events.end(),
                         [](const ScenarioEvent& a, const ScenarioEvent& b) {
                             return a.at_ms < b.at_ms;
                         });
        for (const auto& ev : events) {
            if (ev.at_ms > sc_.duration_ms)
                throw ParameterError("scenario: event after duration: " + ev.kind);
            dispatch(ev);
        }
        for (const auto& v : vehicles_) {
            const OpCounters& c = v.counters();
            metrics_.ops.poly_evals += c.poly_evals;
            metrics_.ops.exps += c.exps;
            metrics_.ops.hashes += c.hashes;
            metrics_.ops.prp_calls += c.prp_calls;
            metrics_.ops.interpolations += c.interpolations;
        }
        return {trace_.str(), metrics_};
    }

private:
    static SystemParams make_params(const Scenario& sc) {
        SystemParams p = Authority::setup(sc.u, sc.b, sc.prime_bits, sc.d, sc.q,
                                          sc.family, sc.seed, sc.profile);
        if (sc.alpha) p.secrets.alpha = *sc.alpha;
        if (sc.gamma_ms) p.secrets.gamma_ms = *sc.gamma_ms;
        return p;
    }

    Vehicle& veh(size_t i) {
        if (i >= vehicles_.size())
            throw ParameterError("scenario: vehicle index out of range: " +
                                 std::to_string(i));
        return vehicles_[i];
    }

    void emit(const json& line) { trace_ << line.dump() << "\n"; }

    uint64_t t_at(uint64_t at) { return vehicles_[0].current_t(at); }

    void record_verdict(Verdict v) {
        if (v == Verdict::Accept) ++metrics_.accepts;
        else ++metrics_.rejects[verdict_name(v)];
    }

    void deliver_honest(size_t sender, const Envelope& env, uint64_t at) {
        for (size_t r = 0; r < vehicles_.size(); ++r) {
            if (r == sender) continue;
            Verdict v = vehicles_[r].verify(env, at);
            record_verdict(v);
            emit(json{{"type", "verify"},
                      {"at", at},
                      {"receiver", r},
                      {"sender", sender},
                      {"verdict", verdict_name(v)}});
        }
    }

    void do_broadcast(size_t sender, const std::string& message, uint64_t at) {
        Bytes m(message.begin(), message.end());
        Envelope env = veh(sender).broadcast(m, at);
        ++metrics_.broadcasts;
        emit(json{{"type", "broadcast"},
                  {"at", at},
                  {"sender", sender},
                  {"message", message},
                  {"pseudonym", hex(env.pseudonym)},
                  {"vno", hex(env.vno)}});
        deliver_honest(sender, env, at);

        // nonrepudiation bookkeeping: the authority names the sender
        uint64_t t = t_at(at);
        Int eno = eno_of(t, m, params_.m.value);
        IdentifyResult r = aa_.identify(env.pseudonym, eno);
        bool ok = r.tid && *r.tid == veh(sender).creds().tid;
        if (ok) ++metrics_.identify_ok;
        else ++metrics_.identify_wrong;
        if (r.qr_root_count > 1) ++metrics_.identify_ambiguous;
        emit(json{{"type", "identify"},
                  {"at", at},
                  {"sender", sender},
                  {"ok", ok},
                  {"qr_roots", r.qr_root_count}});
        last_envelopes_.push_back({sender, env, at});
    }

    void do_bitflip(size_t sender, const std::string& message, uint64_t at) {
        Bytes m(message.begin(), message.end());
        Envelope env = veh(sender).broadcast(m, at);
        env.payload[0] ^= 0x01;
        for (size_t r = 0; r < vehicles_.size(); ++r) {
            if (r == sender) continue;
            Verdict v = vehicles_[r].verify(env, at);
            record_verdict(v);
            ++metrics_.bitflip_trials;
            if (v == Verdict::RejectIntegrity) ++metrics_.bitflip_integrity;
        }
        emit(json{{"type", "attack"},
                  {"name", "bitflip"},
                  {"at", at},
                  {"sender", sender},
                  {"integrity_rejections", metrics_.bitflip_integrity},
                  {"trials", metrics_.bitflip_trials}});
    }

    void do_blacklist(size_t idx, uint64_t at) {
        aa_.blacklist(veh(idx).creds().tid);
        auto bad = Authority::parse_bad_list(aa_.export_bad_list(), params_.m.value);
        for (auto& v : vehicles_) v.set_bad_list(bad);
        emit(json{{"type", "blacklist"},
                  {"at", at},
                  {"vehicle", idx},
                  {"entries", bad.size()}});
    }

    void do_form_cluster(const std::vector<size_t>& founders, uint64_t at) {
        uint64_t t = t_at(at);
        std::vector<Int> cfms;
        for (size_t f : founders) cfms.push_back(veh(f).make_cfm(t));
        Int cid = aa_.form_cluster(cfms, t, sc_.e, sc_.w, sc_.l);
        Int rand = aa_.cluster_rand(cid, t);
        for (size_t i = 0; i < founders.size(); ++i) {
            MembershipIssue q = aa_.issue_membership(cfms[i], cid, t);
            veh(founders[i]).adopt_membership(q, t, rand);
        }
        cluster_ = ClusterView{cid, founders};
        emit(json{{"type", "form_cluster"},
                  {"at", at},
                  {"cluster", hex(cid)},
                  {"founders", founders}});
    }

    ClusterView& cluster() {
        if (!cluster_) throw ParameterError("scenario: no cluster formed yet");
        return *cluster_;
    }

    void do_join(size_t joiner, const std::vector<size_t>& sponsors, uint64_t at) {
        ClusterView& c = cluster();
        uint64_t t = t_at(at);
        MembershipIssue q = aa_.issue_membership(veh(joiner).make_cfm(t), c.cid, t);
        std::vector<Vehicle*> sp;
        for (size_t s : sponsors) sp.push_back(&veh(s));
        veh(joiner).join_cluster(q, sp, t);
        c.members.push_back(joiner);
        emit(json{{"type", "join"},
                  {"at", at},
                  {"vehicle", joiner},
                  {"sponsors", sponsors},
                  {"cluster", hex(c.cid)}});
    }

    void do_token_update(uint64_t at) {
        ClusterView& c = cluster();
        uint64_t t = t_at(at);
        ++metrics_.token_updates;
        bool converged = true;
        std::string note = "ok";
        try {
            aa_.advance_cluster_epoch(c.cid, t);
            std::vector<Bytes> msgs;
            for (size_t m : c.members)
                msgs.push_back(veh(m).make_token_update(c.cid, t));
            Int expected = aa_.cluster_rand(c.cid, t);
            for (size_t i = 0; i < c.members.size(); ++i) {
                std::vector<Bytes> peers;
                for (size_t j = 0; j < c.members.size(); ++j)
                    if (j != i) peers.push_back(msgs[j]);
                Int rand = veh(c.members[i]).update_token(c.cid, peers, t);
                if (rand != expected) converged = false;
            }
        } catch (const ProtocolError& e) {
            converged = false;
            note = e.what();
        }
        if (converged) ++metrics_.token_convergence;
        emit(json{{"type", "token_update"},
                  {"at", at},
                  {"cluster", hex(c.cid)},
                  {"converged", converged},
                  {"note", note}});
    }

    void do_dissolve(size_t founder, uint64_t at) {
        ClusterView& c = cluster();
        bool alive = aa_.dissolution_vote(c.cid, veh(founder).creds().tid,
                                          VoteKind::Vote);
        emit(json{{"type", "dissolve_vote"},
                  {"at", at},
                  {"vehicle", founder},
                  {"alive", alive}});
    }

    void do_forge(uint64_t trials, size_t receiver, uint64_t at) {
        // credential-less actor, granted the broadcast secrets (strong test)
        uint64_t t = t_at(at);
        uint64_t accepts = 0;
        for (uint64_t i = 0; i < trials; ++i) {
            std::string payload = "forge-" + std::to_string(i);
            Envelope env;
            env.payload.assign(payload.begin(), payload.end());
            env.pseudonym = adversary_rng_.uniform_below(params_.m.value);
            env.vno = vno_of(t, env.payload, env.pseudonym, params_.m.value);
            env.sent_at = at;
            Verdict v = veh(receiver).verify(env, at);
            record_verdict(v);
            if (v == Verdict::Accept) ++accepts;
        }
        metrics_.forge_trials += trials;
        metrics_.forge_accepts += accepts;
        emit(json{{"type", "attack"},
                  {"name", "forge"},
                  {"at", at},
                  {"receiver", receiver},
                  {"trials", trials},
                  {"accepts", accepts}});
    }

    void do_reuse(uint64_t trials, size_t insider, size_t receiver, uint64_t at) {
        uint64_t t = t_at(at);
        Bytes base_msg{'b', 'a', 's', 'e'};
        Envelope base = veh(insider).broadcast(base_msg, at);
        uint64_t accepts = 0, ybind = 0;
        for (uint64_t i = 0; i < trials; ++i) {
            std::string payload = "reused-" + std::to_string(i);
            Envelope env;
            env.payload.assign(payload.begin(), payload.end());
            env.pseudonym = base.pseudonym;
            env.vno = vno_of(t, env.payload, env.pseudonym, params_.m.value);
            env.sent_at = at;
            Verdict v = veh(receiver).verify(env, at);
            record_verdict(v);
            if (v == Verdict::Accept) ++accepts;
            if (v == Verdict::RejectYBinding) ++ybind;
        }
        metrics_.reuse_trials += trials;
        metrics_.reuse_accepts += accepts;
        metrics_.reuse_ybinding += ybind;
        emit(json{{"type", "attack"},
                  {"name", "reuse"},
                  {"at", at},
                  {"insider", insider},
                  {"receiver", receiver},
                  {"trials", trials},
                  {"accepts", accepts},
                  {"y_binding_rejections", ybind}});
    }

    void do_replay(uint64_t count, size_t sender, size_t receiver, uint64_t at) {
        Bytes m{'r', 'e', 'p', 'l', 'a', 'y', '-', 'm', 'e'};
        Envelope env = veh(sender).broadcast(m, at);
        Verdict first = veh(receiver).verify(env, at);
        record_verdict(first);
        uint64_t in_epoch = 0, cross = 0;
        for (uint64_t i = 0; i < count; ++i) {
            Verdict v = veh(receiver).verify(env, at);
            record_verdict(v);
            if (v == Verdict::RejectReplay) ++in_epoch;
        }
        uint64_t next_epoch_at =
            (at / params_.secrets.gamma_ms + 1) * params_.secrets.gamma_ms;
        for (uint64_t i = 0; i < count; ++i) {
            Verdict v = veh(receiver).verify(env, next_epoch_at);
            record_verdict(v);
            if (v == Verdict::RejectIntegrity) ++cross;
        }
        metrics_.replay_trials += 2 * count;
        metrics_.replay_in_epoch_detected += in_epoch;
        metrics_.replay_cross_integrity += cross;
        emit(json{{"type", "attack"},
                  {"name", "replay"},
                  {"at", at},
                  {"sender", sender},
                  {"receiver", receiver},
                  {"first", verdict_name(first)},
                  {"in_epoch_detected", in_epoch},
                  {"cross_epoch_integrity", cross},
                  {"trials", 2 * count}});
    }

    void do_collude(size_t size, uint64_t at) {
        if (sc_.family != PolyFamily::Generic)
            throw ParameterError("scenario: collusion demo needs the generic family");
        if (size > params_.collusion_threshold && !sc_.assumption_violating)
            throw ParameterError(
                "scenario: coalition above threshold without assumption_violating");
        ++metrics_.collusions;
        bool success = false;
        std::string note;
        if (size < sc_.d) {
            note = "coalition below interpolation degree; reconstruction "
                   "underdetermined";
        } else if (size > vehicles_.size()) {
            throw ParameterError("scenario: coalition larger than population");
        } else {
            // coalition pools its shares and interpolates the secret matrix
            // column by column
            const Int& M = params_.m.value;
            std::vector<Int> xs;
            for (size_t i = 0; i < size; ++i)
                xs.push_back(vehicles_[i].creds().tid);
            bool all_match = true;
            try {
                for (unsigned k = 0; k < sc_.q; ++k) {
                    std::vector<Int> vs;
                    for (size_t i = 0; i < size; ++i) {
                        const auto& coeffs = vehicles_[i].creds().share.coeffs;
                        vs.push_back(k < coeffs.size() ? coeffs[k] : Int(0));
                    }
                    std::vector<Int> col = lagrange_coeffs(xs, vs, M);
                    for (unsigned a = 0; a < sc_.d; ++a) {
                        Int truth = norm(params_.poly.coeffs[a][k], M);
                        Int got = a < col.size() ? col[a] : Int(0);
                        if (got != truth) all_match = false;
                    }
                    for (size_t extra = sc_.d; extra < col.size(); ++extra)
                        if (col[extra] != 0) all_match = false;
                }
                success = all_match;
                note = success ? "secret polynomial reconstructed"
                               : "reconstruction mismatch";
            } catch (const ProtocolError& e) {
                note = e.what();
            }
        }
        if (success) ++metrics_.collusion_successes;
        emit(json{{"type", "attack"},
                  {"name", "collude"},
                  {"at", at},
                  {"size", size},
                  {"success", success},
                  {"note", note}});
    }

    void dispatch(const ScenarioEvent& ev) {
        const json& a = ev.args;
        uint64_t at = ev.at_ms;
        if (ev.kind == "broadcast") {
            do_broadcast(a.at("vehicle").get<size_t>(),
                         a.at("message").get<std::string>(), at);
        } else if (ev.kind == "broadcast_round") {
            std::string prefix = a.value("prefix", std::string("msg"));
            for (size_t i = 0; i < vehicles_.size(); ++i)
                do_broadcast(i, prefix + "-" + std::to_string(i), at);
        } else if (ev.kind == "bitflip") {
            do_bitflip(a.at("vehicle").get<size_t>(),
                       a.at("message").get<std::string>(), at);
        } else if (ev.kind == "blacklist") {
            do_blacklist(a.at("vehicle").get<size_t>(), at);
        } else if (ev.kind == "form_cluster") {
            do_form_cluster(a.at("founders").get<std::vector<size_t>>(), at);
        } else if (ev.kind == "join") {
            do_join(a.at("vehicle").get<size_t>(),
                    a.at("sponsors").get<std::vector<size_t>>(), at);
        } else if (ev.kind == "token_update") {
            do_token_update(at);
        } else if (ev.kind == "dissolve") {
            do_dissolve(a.at("vehicle").get<size_t>(), at);
        } else if (ev.kind == "forge") {
            do_forge(a.value("trials", uint64_t(100)),
                     a.value("receiver", size_t(0)), at);
        } else if (ev.kind == "reuse") {
            do_reuse(a.value("trials", uint64_t(100)),
                     a.value("insider", size_t(0)), a.value("receiver", size_t(1)),
                     at);
        } else if (ev.kind == "replay") {
            do_replay(a.value("count", uint64_t(10)),
                      a.value("sender", size_t(0)), a.value("receiver", size_t(1)),
                      at);
        } else if (ev.kind == "collude") {
            do_collude(a.at("size").get<size_t>(), at);
        } else {
            throw ParameterError("scenario: unknown event kind: " + ev.kind);
        }
    }

    struct Sent {
        size_t sender;
        Envelope env;
        uint64_t at;
    };

    Scenario sc_;
    SystemParams params_;
    Authority aa_;
    Rng adversary_rng_;
    std::vector<Vehicle> vehicles_;
    std::optional<ClusterView> cluster_;
    std::vector<Sent> last_envelopes_;
    std::ostringstream trace_;
    Metrics metrics_;
};

} // namespace

Scenario Scenario::from_json(const json& j) {
    if (!j.is_object()) throw ParameterError("scenario: not an object");
    Scenario sc;
    sc.seed = j.value("seed", uint64_t(1));
    sc.profile = profile_of(j.value("profile", std::string("toy")));
    sc.family = family_of(j.value("family", std::string("squared")));
    sc.variant = j.value("variant", false);
    sc.assumption_violating = j.value("assumption_violating", false);
    sc.vehicles = j.value("vehicles", 2u);
    sc.u = j.value("u", 1u);
    sc.b = j.value("b", 2u);
    sc.prime_bits = j.value("prime_bits", 8u);
    sc.d = j.value("d", 3u);
    sc.q = j.value("q", 3u);
    if (j.contains("cluster")) {
        const json& c = j.at("cluster");
        sc.e = c.value("e", 3u);
        sc.w = c.value("w", 2u);
        sc.l = c.value("l", 4u);
    }
    sc.duration_ms = j.value("duration_ms", uint64_t(10000));
    if (j.contains("alpha")) sc.alpha = j.at("alpha").get<uint64_t>();
    if (j.contains("gamma_ms")) sc.gamma_ms = j.at("gamma_ms").get<uint64_t>();
    for (const json& e : j.value("events", json::array())) {
        ScenarioEvent ev;
        ev.at_ms = e.value("at", uint64_t(0));
        ev.kind = e.at("kind").get<std::string>();
        ev.args = e;
        sc.events.push_back(std::move(ev));
    }
    return sc;
}

json Scenario::to_json() const {
    json j{{"seed", seed},
           {"profile", profile_name(profile)},
           {"family", family_name(family)},
           {"variant", variant},
           {"assumption_violating", assumption_violating},
           {"vehicles", vehicles},
           {"u", u},
           {"b", b},
           {"prime_bits", prime_bits},
           {"d", d},
           {"q", q},
           {"cluster", {{"e", e}, {"w", w}, {"l", l}}},
           {"duration_ms", duration_ms}};
    if (alpha) j["alpha"] = *alpha;
    if (gamma_ms) j["gamma_ms"] = *gamma_ms;
    json evs = json::array();
    for (const auto& ev : events) {
        json e = ev.args;
        e["at"] = ev.at_ms;
        e["kind"] = ev.kind;
        evs.push_back(e);
    }
    j["events"] = evs;
    return j;
}

json Metrics::to_json() const {
    json rej = json::object();
    for (const auto& [k, v] : rejects) rej[k] = v;
    return json{
        {"broadcasts", broadcasts},
        {"accepts", accepts},
        {"rejects", rej},
        {"forge", {{"trials", forge_trials}, {"accepts", forge_accepts}}},
        {"reuse",
         {{"trials", reuse_trials},
          {"accepts", reuse_accepts},
          {"y_binding_rejections", reuse_ybinding}}},
        {"bitflip",
         {{"trials", bitflip_trials}, {"integrity_rejections", bitflip_integrity}}},
        {"replay",
         {{"trials", replay_trials},
          {"in_epoch_detected", replay_in_epoch_detected},
          {"cross_epoch_integrity", replay_cross_integrity}}},
        {"identify",
         {{"ok", identify_ok},
          {"wrong", identify_wrong},
          {"ambiguous", identify_ambiguous}}},
        {"token_updates", token_updates},
        {"token_convergence", token_convergence},
        {"collusions",
         {{"attempted", collusions}, {"succeeded", collusion_successes}}},
        {"ops",
         {{"poly_evals", ops.poly_evals},
          {"exps", ops.exps},
          {"hashes", ops.hashes},
          {"prp_calls", ops.prp_calls},
          {"interpolations", ops.interpolations}}}};
}

RunResult run_scenario(const Scenario& scenario) {
    Sim sim(scenario);
    return sim.run();
}

bool verify_trace(const std::string& trace_text, std::string* diagnostic) {
    std::istringstream in(trace_text);
    std::string header;
    if (!std::getline(in, header)) {
        if (diagnostic) *diagnostic = "empty trace";
        return false;
    }
    json h = json::parse(header, nullptr, false);
    if (h.is_discarded() || h.value("type", std::string()) != "header" ||
        !h.contains("scenario")) {
        if (diagnostic) *diagnostic = "missing or malformed header line";
        return false;
    }
    Scenario sc = Scenario::from_json(h.at("scenario"));
    RunResult rerun = run_scenario(sc);
    if (rerun.trace == trace_text) return true;
    if (diagnostic) {
        std::istringstream a(trace_text), b(rerun.trace);
        std::string la, lb;
        size_t line = 0;
        while (true) {
            ++line;
            bool ga = static_cast<bool>(std::getline(a, la));
            bool gb = static_cast<bool>(std::getline(b, lb));
            if (!ga && !gb) break;
            if (la != lb || ga != gb) {
                *diagnostic = "first divergence at line " + std::to_string(line);
                return false;
            }
        }
        *diagnostic = "length mismatch";
    }
    return false;
}

} // namespace v2v
