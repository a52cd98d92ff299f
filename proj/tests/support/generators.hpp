#pragma once

// Hand-rolled generators for the property suites. Everything is driven by a
// seeded std::mt19937_64 so failures reproduce from the printed seed.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "protoloop/injection.hpp"
#include "protoloop/workspace.hpp"

namespace protoloop::testing {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }
    std::size_t between(std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(engine_);
    }
    bool chance(double p) { return std::bernoulli_distribution(p)(engine_); }

    template <typename T>
    const T& pick(const std::vector<T>& items) { return items[below(items.size())]; }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

/// A code-like line: optional indentation, a token soup, sometimes trailing
/// blanks, sometimes empty. Duplicates are common on purpose.
std::string random_line(Rng& rng);

/// 0..max_lines lines joined with '\n'; the trailing newline is random.
std::string random_text(Rng& rng, std::size_t max_lines);

/// 1..4 files over a small path pool (with nested directories).
Workspace random_workspace(Rng& rng);

/// A snippet that applies cleanly to `ws`.
Snippet random_valid_snippet(Rng& rng, const Workspace& ws, const std::string& id);

/// A well-formed snippet guaranteed to fail against `ws` (missing match,
/// line out of range, missing file, or create over an existing file).
Snippet random_failing_snippet(Rng& rng, const Workspace& ws, const std::string& id);

/// Independent model of snippet application on a list of lines. Returns
/// nullopt where the engine must raise.
std::optional<std::map<std::string, std::string>> oracle_apply(
    const std::map<std::string, std::string>& files, const Snippet& snippet);

std::map<std::string, std::string> as_map(const Workspace& ws);

}  // namespace protoloop::testing
