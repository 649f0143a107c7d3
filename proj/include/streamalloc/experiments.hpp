#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "streamalloc/model.hpp"
#include "streamalloc/noback.hpp"
#include "streamalloc/random.hpp"

namespace streamalloc {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ExperimentKind { Fig2a, Fig2b, Regret, Noback, Oracle };

std::string to_string(ExperimentKind kind);
/// Accepts the CLI names (fig2a, fig2b, regret, noback, oracle) and the long forms
/// regret_curve, noback_demo, oracle_suite.
ExperimentKind parse_kind(const std::string& name);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Fig2a;
    std::vector<int> n_values{10, 15, 20, 25, 30};
    double m_ratio = 0.4;  // m = floor(m_ratio * n)
    std::int64_t Z = 20;
    std::int64_t z_min = 8;  // p drawn uniformly from {z_min, ..., z_max} / Z
    std::int64_t z_max = 16;
    double theta = 0.5;
    std::vector<double> h_values{0.4, 0.6, 0.8};
    std::int64_t T = 10000;
    int replications = 10;
    std::uint64_t seed = 1;
    int w = 0;  // 0: smallest w valid for grid spacing 1/Z
    int r = 2;
    bool backfill = false;  // idle channels go to owed users (off: left idle)
    std::vector<std::int64_t> regret_z{9, 12, 15, 18};  // regret instance numerators over Z
    int regret_m = 2;

    static ExperimentConfig defaults(ExperimentKind kind);

    /// Channel count for n users; throws ConfigError when it is below 1.
    int m_for(int n) const;
    /// w actually used by iFestival runs.
    int effective_w() const;
    /// Throws ConfigError on any out-of-range field.
    void validate() const;
    /// Every field as `key = value` lines in a fixed order; the hashed and echoed form.
    std::string canonical() const;
};

/// Flat `key = value` text, comma-separated lists, `#` comments. Keys override
/// ExperimentConfig::defaults(kind). Throws ConfigError on unknown keys or bad values.
ExperimentConfig parse_config(std::istream& is, ExperimentKind kind);

/// n users with p uniform over the grid {z_min..z_max}/Z and PowerLaw(theta) costs.
std::vector<UserProfile> generate_instance(const ExperimentConfig& config, int n, Rng& rng);

/// Random overloaded rate-program instance: n users on grid Z, costs drawn from PowerLaw
/// theta in {0.3, 0.5, 0.7} and Linear(1), capacity k/Z strictly below sum p.
struct OracleInstance {
    std::vector<UserProfile> users;
    Rational capacity;
};
OracleInstance random_oracle_instance(int n, std::int64_t Z, Rng& rng);

/// Uniform-support Noback instance: supports inside [0, 1], weights in [1, 5), capacity
/// floor(m_ratio * n) clamped below at 1/2.
NobackInstance random_noback_instance(int n, double m_ratio, Rng& rng);

struct ResultRow {
    std::string experiment;
    int n = 0;
    std::optional<int> m;     // empty where capacity is not a channel count
    std::optional<double> h;  // empty where fading does not apply
    std::string policy;
    std::optional<std::int64_t> T;
    int replications = 0;
    std::uint64_t seed = 0;
    double cost_mean = 0.0;
    double cost_stderr = 0.0;
};

struct ExperimentResult {
    std::vector<ResultRow> rows;  // canonical order: n, then h, then policy as emitted
};

/// Runs every (n, replication) cell, `jobs` at a time; output does not depend on `jobs`.
ExperimentResult run_experiment(const ExperimentConfig& config, int jobs = 1);

inline constexpr const char* kResultsSchema = "streamalloc-results/1";
inline constexpr const char* kResultsHeader =
    "experiment,n,m,h,policy,T,replications,seed,cost_mean,cost_stderr";

/// `# schema`, the echoed config as `#` lines, the header, then one line per row; LF endings.
void write_csv(std::ostream& os, const ExperimentConfig& config, const ExperimentResult& result);

/// 64-bit FNV-1a of ExperimentConfig::canonical().
std::uint64_t config_hash(const ExperimentConfig& config);

void write_manifest(std::ostream& os, const ExperimentConfig& config, double wall_seconds);

/// Sample mean and standard error of the mean.
struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
};
MeanStderr mean_stderr(const std::vector<double>& xs);

}  // namespace streamalloc
