#pragma once

#include <json.hpp>

#include "v2v/vehicle.hpp"

namespace v2v {

// One scripted action. `args` is interpreted per kind; see Sim::dispatch for
// the schema of each kind.
struct ScenarioEvent {
    uint64_t at_ms = 0;
    std::string kind;
    nlohmann::json args;
};

struct Scenario {
    uint64_t seed = 1;
    Profile profile = Profile::Toy;
    PolyFamily family = PolyFamily::Squared;
    bool variant = false;
    // Collusion coalitions above the configured threshold are rejected
    // unless the scenario opts in explicitly.
    bool assumption_violating = false;

    unsigned vehicles = 2;
    unsigned u = 1, b = 2, prime_bits = 8, d = 3, q = 3;
    unsigned e = 3, w = 2, l = 4; // cluster founding/interpolation/lifetime

    uint64_t duration_ms = 10000;
    std::optional<uint64_t> alpha;    // broadcast-secret increment override
    std::optional<uint64_t> gamma_ms; // epoch length override

    std::vector<ScenarioEvent> events;

    static Scenario from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct Metrics {
    uint64_t broadcasts = 0;
    uint64_t accepts = 0;
    std::map<std::string, uint64_t> rejects; // keyed by verdict name

    uint64_t forge_trials = 0, forge_accepts = 0;
    uint64_t reuse_trials = 0, reuse_accepts = 0, reuse_ybinding = 0;
    uint64_t bitflip_trials = 0, bitflip_integrity = 0;
    uint64_t replay_trials = 0, replay_in_epoch_detected = 0,
             replay_cross_integrity = 0;

    uint64_t identify_ok = 0, identify_wrong = 0, identify_ambiguous = 0;

    uint64_t token_updates = 0, token_convergence = 0;
    uint64_t collusions = 0, collusion_successes = 0;

    OpCounters ops; // aggregated over all honest vehicles

    nlohmann::json to_json() const;
};

struct RunResult {
    std::string trace; // line-delimited records, first line embeds the scenario
    Metrics metrics;
};

// Deterministic given the scenario (all randomness is seeded from it).
RunResult run_scenario(const Scenario& scenario);

// Re-runs the scenario embedded in the trace header and compares byte for
// byte. On mismatch, *diagnostic names the first differing line.
bool verify_trace(const std::string& trace_text,
                  std::string* diagnostic = nullptr);

} // namespace v2v
