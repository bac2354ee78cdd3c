#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "mdbs/mediator.hpp"

namespace mdbs {

// Deterministic source of valid schema changes against a site's current
// schema; drives evolution scenarios (CLI `random-changes` steps and the
// randomized test corpora).
class ChangeGenerator {
public:
    explicit ChangeGenerator(std::uint64_t seed) : rng_(seed) {}

    SchemaChange next(const LocalSchema& current);
    std::mt19937_64& rng() { return rng_; }

private:
    std::string fresh(const char* prefix);

    std::mt19937_64 rng_;
    std::uint64_t counter_ = 0;
};

struct ScenarioOutcome {
    int exit_code = 0;
    std::string output;
};

// Replays a scenario script line by line. Steps:
//   register <site> <schema-file> <data-file>
//   assert <dsl-file>
//   integrate <def-file>
//   query <query text>
//   change <site> <change-line>
//   link <site> up|down
//   relay <site> | relay --all
//   faults <fault-file>
//   random-changes <n>
//   check
// Relative paths resolve against base_dir. Execution stops at the first
// failing step; `check` maps convergence inequality to exit code 3.
ScenarioOutcome run_scenario(Federation& fed, const std::string& script,
                             const std::filesystem::path& base_dir, std::uint64_t seed);

// Fault-injection script: one event per line, ordered by step number,
//   t=<step> site=<id> online
//   t=<step> site=<id> offline
//   t=<step> site=<id> change kind=<K> class=<c> [attr=<a>] [new=<x>] [type=<t>]
// Returns the number of events applied.
std::size_t run_fault_script(Federation& fed, const std::string& script);

} // namespace mdbs
