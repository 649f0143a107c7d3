#include "streamalloc/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <functional>
#include <iomanip>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "streamalloc/format.hpp"
#include "streamalloc/optimizer.hpp"
#include "streamalloc/simulator.hpp"

#ifndef STREAMALLOC_VERSION
#define STREAMALLOC_VERSION "0.0.0"
#endif

namespace streamalloc {

std::string to_string(ExperimentKind kind)
{
    switch (kind) {
    case ExperimentKind::Fig2a: return "fig2a";
    case ExperimentKind::Fig2b: return "fig2b";
    case ExperimentKind::Regret: return "regret";
    case ExperimentKind::Noback: return "noback";
    case ExperimentKind::Oracle: return "oracle";
    }
    return "unknown";
}

ExperimentKind parse_kind(const std::string& name)
{
    if (name == "fig2a") return ExperimentKind::Fig2a;
    if (name == "fig2b") return ExperimentKind::Fig2b;
    if (name == "regret" || name == "regret_curve") return ExperimentKind::Regret;
    if (name == "noback" || name == "noback_demo") return ExperimentKind::Noback;
    if (name == "oracle" || name == "oracle_suite") return ExperimentKind::Oracle;
    throw ConfigError("unknown experiment '" + name + "'");
}

ExperimentConfig ExperimentConfig::defaults(ExperimentKind kind)
{
    ExperimentConfig c;
    c.kind = kind;
    switch (kind) {
    case ExperimentKind::Fig2a:
    case ExperimentKind::Fig2b:
        break;
    case ExperimentKind::Regret:
        c.n_values = {4};
        c.h_values = {1.0};
        c.T = 1000000;
        c.replications = 50;
        c.w = 160;
        break;
    case ExperimentKind::Noback:
        c.n_values = {2, 4, 6, 8, 10};
        c.h_values = {};
        c.replications = 100;
        break;
    case ExperimentKind::Oracle:
        c.n_values = {2, 3, 4, 5, 6, 7, 8};
        c.h_values = {};
        c.Z = 10;
        c.z_min = 1;
        c.z_max = 10;
        c.replications = 30;
        break;
    }
    return c;
}

int ExperimentConfig::m_for(int n) const
{
    const int m = static_cast<int>(std::floor(m_ratio * n + 1e-9));
    if (m < 1) throw ConfigError("m_ratio * n gives no channel for n = " + std::to_string(n));
    return m;
}

int ExperimentConfig::effective_w() const
{
    if (w > 0) return w;
    // neighbouring grid points are 1/Z apart, so this bounds any pair of distinct rates
    return static_cast<int>(std::floor(2.0 * static_cast<double>(Z) * std::log(static_cast<double>(r)))) + 1;
}

void ExperimentConfig::validate() const
{
    auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    if (kind != ExperimentKind::Regret) {
        if (n_values.empty()) fail("n must list at least one value");
        for (int n : n_values)
            if (n < 1) fail("every n must be positive");
    }
    if (!(m_ratio > 0.0)) fail("m_ratio must be positive");
    if (Z < 1) fail("Z must be positive");
    if (z_min < 0 || z_min > z_max || z_max > Z) fail("need 0 <= z_min <= z_max <= Z");
    if (!(theta > 0.0 && theta < 1.0)) fail("theta must lie in (0, 1)");
    for (double h : h_values)
        if (!(h > 0.0 && h <= 1.0)) fail("every h must lie in (0, 1]");
    if (T < 1) fail("T must be positive");
    if (replications < 1) fail("replications must be positive");
    if (w < 0) fail("w must be non-negative");
    if (r < 2) fail("r must be at least 2");
    switch (kind) {
    case ExperimentKind::Fig2a:
    case ExperimentKind::Fig2b:
        if (h_values.empty()) fail("h must list at least one value");
        for (int n : n_values) m_for(n);
        break;
    case ExperimentKind::Regret:
        if (regret_z.empty()) fail("regret_z must list at least one value");
        for (auto z : regret_z)
            if (z < 0 || z > Z) fail("regret_z values must lie in [0, Z]");
        if (regret_m < 1) fail("regret_m must be positive");
        break;
    case ExperimentKind::Noback:
        break;
    case ExperimentKind::Oracle:
        for (int n : n_values)
            if (n > kBruteForceMaxUsers) fail("oracle n is limited to " + std::to_string(kBruteForceMaxUsers));
        break;
    }
}

namespace {

template <class T>
std::string join(const std::vector<T>& xs)
{
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ',';
        if constexpr (std::is_floating_point_v<T>)
            out += format_double(xs[i]);
        else
            out += std::to_string(xs[i]);
    }
    return out;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text)
{
    T v{};
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw ConfigError("bad value for " + key + ": '" + text + "'");
    return v;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& text)
{
    std::vector<T> out;
    if (text.empty()) return out;
    std::istringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number<T>(key, trim(item)));
    return out;
}

bool parse_bool(const std::string& key, const std::string& text)
{
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw ConfigError("bad value for " + key + ": '" + text + "' (expected true or false)");
}

}  // namespace

std::string ExperimentConfig::canonical() const
{
    std::ostringstream os;
    os << "experiment = " << to_string(kind) << '\n';
    os << "n = " << join(n_values) << '\n';
    os << "m_ratio = " << format_double(m_ratio) << '\n';
    os << "Z = " << Z << '\n';
    os << "z_min = " << z_min << '\n';
    os << "z_max = " << z_max << '\n';
    os << "theta = " << format_double(theta) << '\n';
    os << "h = " << join(h_values) << '\n';
    os << "T = " << T << '\n';
    os << "replications = " << replications << '\n';
    os << "seed = " << seed << '\n';
    os << "w = " << w << '\n';
    os << "r = " << r << '\n';
    os << "backfill = " << (backfill ? "true" : "false") << '\n';
    os << "regret_z = " << join(regret_z) << '\n';
    os << "regret_m = " << regret_m << '\n';
    return os.str();
}

ExperimentConfig parse_config(std::istream& is, ExperimentKind kind)
{
    ExperimentConfig c = ExperimentConfig::defaults(kind);
    std::set<std::string> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (!seen.insert(key).second) throw ConfigError("duplicate key '" + key + "'");

        if (key == "experiment") {
            if (parse_kind(val) != kind)
                throw ConfigError("config is for '" + val + "' but the command is '" + to_string(kind) + "'");
        } else if (key == "n") {
            c.n_values = parse_list<int>(key, val);
        } else if (key == "m_ratio") {
            c.m_ratio = parse_number<double>(key, val);
        } else if (key == "Z") {
            c.Z = parse_number<std::int64_t>(key, val);
        } else if (key == "z_min") {
            c.z_min = parse_number<std::int64_t>(key, val);
        } else if (key == "z_max") {
            c.z_max = parse_number<std::int64_t>(key, val);
        } else if (key == "theta") {
            c.theta = parse_number<double>(key, val);
        } else if (key == "h") {
            c.h_values = parse_list<double>(key, val);
        } else if (key == "T") {
            c.T = parse_number<std::int64_t>(key, val);
        } else if (key == "replications") {
            c.replications = parse_number<int>(key, val);
        } else if (key == "seed") {
            c.seed = parse_number<std::uint64_t>(key, val);
        } else if (key == "w") {
            c.w = parse_number<int>(key, val);
        } else if (key == "r") {
            c.r = parse_number<int>(key, val);
        } else if (key == "backfill") {
            c.backfill = parse_bool(key, val);
        } else if (key == "regret_z") {
            c.regret_z = parse_list<std::int64_t>(key, val);
        } else if (key == "regret_m") {
            c.regret_m = parse_number<int>(key, val);
        } else {
            throw ConfigError("unknown key '" + key + "'");
        }
    }
    c.validate();
    return c;
}

std::vector<UserProfile> generate_instance(const ExperimentConfig& config, int n, Rng& rng)
{
    const auto width = static_cast<std::uint64_t>(config.z_max - config.z_min + 1);
    std::vector<UserProfile> users(n);
    for (int i = 0; i < n; ++i) {
        const GridProb p(config.z_min + static_cast<std::int64_t>(uniform_below(rng, width)), config.Z);
        users[i].id = i;
        users[i].p = p;
        users[i].cost = power_law(config.theta, p);
    }
    return users;
}

OracleInstance random_oracle_instance(int n, std::int64_t Z, Rng& rng)
{
    static constexpr double kThetas[] = {0.3, 0.5, 0.7};
    OracleInstance inst;
    std::int64_t total = 0;
    for (int i = 0; i < n; ++i) {
        const GridProb p(1 + static_cast<std::int64_t>(uniform_below(rng, static_cast<std::uint64_t>(Z))), Z);
        UserProfile u;
        u.id = i;
        u.p = p;
        const auto family = uniform_below(rng, 4);
        u.cost = family < 3 ? power_law(kThetas[family], p) : linear_cost(1.0, p);
        total += p.z();
        inst.users.push_back(std::move(u));
    }
    // capacities on the half grid, so floor(c * Z) is exercised too
    const auto k = 1 + static_cast<std::int64_t>(uniform_below(rng, static_cast<std::uint64_t>(2 * total - 1)));
    inst.capacity = Rational(k, 2 * Z);
    return inst;
}

NobackInstance random_noback_instance(int n, double m_ratio, Rng& rng)
{
    NobackInstance inst;
    for (int i = 0; i < n; ++i) {
        const double a = 0.6 * uniform01(rng);
        const double b = std::min(1.0, a + 0.1 + 0.3 * uniform01(rng));
        inst.users.push_back({1.0 + 4.0 * uniform01(rng), RateDistribution::uniform(a, b)});
    }
    const auto m = static_cast<std::int64_t>(std::floor(m_ratio * n + 1e-9));
    inst.capacity = m >= 1 ? Rational(m) : Rational(1, 2);
    return inst;
}

MeanStderr mean_stderr(const std::vector<double>& xs)
{
    MeanStderr out;
    if (xs.empty()) return out;
    const double k = static_cast<double>(xs.size());
    double s = 0.0;
    for (double x : xs) s += x;
    out.mean = s / k;
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - out.mean) * (x - out.mean);
        out.stderr_ = std::sqrt(ss / (k - 1.0) / k);
    }
    return out;
}

namespace {

// One output row before aggregation; cells fill `values` in this order.
struct RowKey {
    int n = 0;
    std::optional<int> m;
    std::optional<double> h;
    std::string policy;
    std::optional<std::int64_t> T;
};

struct Plan {
    std::vector<RowKey> keys;
    std::vector<int> cell_n;  // n of every cell, cell index = n index * replications + rep
    std::function<std::vector<double>(int n, int rep, std::uint64_t cell_seed)> cell;
    std::function<std::size_t(int n)> first_key;  // index of n's first key in `keys`
};

std::vector<double> fig2a_cell(const ExperimentConfig& c, int n, std::uint64_t cell_seed)
{
    Rng rng(stream_seed(cell_seed, 0));
    const auto users = generate_instance(c, n, rng);
    const int m = c.m_for(n);
    const ConcMinSolution sol = conc_min(users, Rational(m));
    std::vector<ConsumptionProcess> consumption;
    for (const auto& u : users) consumption.push_back(ConsumptionProcess::iid(u.p));
    SimOptions opt;
    opt.checkpoints = {c.T};
    opt.backfill = c.backfill;

    std::vector<double> out{sol.cost};
    for (double h : c.h_values) {
        const auto cfg = SystemConfig::uniform(n, m, h, cell_seed, c.T);
        const std::vector<SimTrace> tr{
            run_sim(StaticAllocate{sol.rates}, cfg, users, consumption, c.T, stream_seed(cell_seed, 1), opt)};
        out.push_back(asymptotic_cost(users, static_service_rates(sol.rates, tr)));
    }
    return out;
}

std::vector<double> fig2b_cell(const ExperimentConfig& c, int n, std::uint64_t cell_seed)
{
    Rng rng(stream_seed(cell_seed, 0));
    const auto users = generate_instance(c, n, rng);
    const int m = c.m_for(n);
    std::vector<ConsumptionProcess> consumption;
    for (const auto& u : users) consumption.push_back(ConsumptionProcess::iid(u.p));
    SimOptions opt;
    opt.checkpoints = {c.T};
    opt.backfill = c.backfill;
    const std::uint64_t sim_seed = stream_seed(cell_seed, 1);

    std::vector<double> out{benchmark_cost(users, Rational(m))};
    for (double h : c.h_values) {
        const auto cfg = SystemConfig::uniform(n, m, h, cell_seed, c.T);
        const IFestivalParams params{c.effective_w(), c.r};
        out.push_back(run_sim(params, cfg, users, consumption, c.T, sim_seed, opt).cost(users));
    }
    const auto cfg = SystemConfig::uniform(n, m, 1.0, cell_seed, c.T);
    out.push_back(run_sim(RoundRobin{}, cfg, users, consumption, c.T, sim_seed, opt).cost(users));
    return out;
}

std::vector<UserProfile> regret_users(const ExperimentConfig& c)
{
    std::vector<UserProfile> users;
    for (std::size_t i = 0; i < c.regret_z.size(); ++i) {
        UserProfile u;
        u.id = static_cast<int>(i);
        u.p = GridProb(c.regret_z[i], c.Z);
        u.cost = power_law(c.theta, u.p);
        users.push_back(std::move(u));
    }
    return users;
}

std::vector<double> regret_cell(const ExperimentConfig& c, std::uint64_t cell_seed)
{
    const auto users = regret_users(c);
    const int n = static_cast<int>(users.size());
    const ConcMinSolution sol = conc_min(users, Rational(c.regret_m));
    std::vector<ConsumptionProcess> consumption;
    for (const auto& u : users) consumption.push_back(ConsumptionProcess::iid(u.p));
    const auto cfg = SystemConfig::uniform(n, c.regret_m, 1.0, cell_seed, c.T);
    const SimTrace tr =
        run_sim(IFestivalParams{c.effective_w(), c.r}, cfg, users, consumption, c.T, stream_seed(cell_seed, 1));

    std::vector<double> out{sol.cost};
    for (const auto& cp : tr.checkpoints) {
        double excess = 0.0;
        for (int i = 0; i < n; ++i) {
            const double kappa = std::max(users[i].p.to_double() - to_double(sol.rates.alpha[i]), 0.0);
            excess += static_cast<double>(cp.pauses[i]) - kappa * static_cast<double>(cp.t);
        }
        out.push_back(excess);
        out.push_back(cp.cost);
        out.push_back(cp.cost - sol.cost);
    }
    return out;
}

std::vector<double> noback_cell(const ExperimentConfig& c, int n, std::uint64_t cell_seed)
{
    Rng rng(stream_seed(cell_seed, 0));
    const NobackInstance inst = random_noback_instance(n, c.m_ratio, rng);
    const NobackSolution sol = noback_solve(inst);

    // baseline: rates proportional to the mean rate, capped at the support top
    double mean_total = 0.0;
    for (const auto& u : inst.users) mean_total += u.dist.mean();
    const double cap = to_double(inst.capacity);
    std::vector<double> prop;
    for (const auto& u : inst.users) prop.push_back(std::min(u.dist.hi, cap * u.dist.mean() / mean_total));
    return {expected_cost(inst, sol.alpha), expected_cost(inst, prop)};
}

std::vector<double> oracle_cell(const ExperimentConfig& c, int n, std::uint64_t cell_seed)
{
    Rng rng(stream_seed(cell_seed, 0));
    const OracleInstance inst = random_oracle_instance(n, c.Z, rng);
    const double fast = conc_min(inst.users, inst.capacity).cost;
    const double slow = brute_force_alpha(inst.users, inst.capacity).cost;
    return {std::abs(fast - slow), slow, fast};
}

Plan make_plan(const ExperimentConfig& c)
{
    Plan plan;
    std::vector<std::size_t> starts;
    const std::vector<int> ns = c.kind == ExperimentKind::Regret
                                    ? std::vector<int>{static_cast<int>(c.regret_z.size())}
                                    : c.n_values;
    for (int n : ns) {
        starts.push_back(plan.keys.size());
        switch (c.kind) {
        case ExperimentKind::Fig2a: {
            const int m = c.m_for(n);
            plan.keys.push_back({n, m, std::nullopt, "bound", std::nullopt});
            const std::string label = c.backfill ? "allocate_channels_backfill" : "allocate_channels";
            for (double h : c.h_values) plan.keys.push_back({n, m, h, label, c.T});
            break;
        }
        case ExperimentKind::Fig2b: {
            const int m = c.m_for(n);
            plan.keys.push_back({n, m, std::nullopt, "bound", std::nullopt});
            for (double h : c.h_values) plan.keys.push_back({n, m, h, "ifestival", c.T});
            plan.keys.push_back({n, m, 1.0, "round_robin", c.T});
            break;
        }
        case ExperimentKind::Regret:
            plan.keys.push_back({n, c.regret_m, std::nullopt, "bound", std::nullopt});
            for (auto t : log_checkpoints(c.T)) {
                plan.keys.push_back({n, c.regret_m, 1.0, "excess_pauses", t});
                plan.keys.push_back({n, c.regret_m, 1.0, "ifestival", t});
                plan.keys.push_back({n, c.regret_m, 1.0, "regret", t});
            }
            break;
        case ExperimentKind::Noback: {
            const auto m = static_cast<int>(std::floor(c.m_ratio * n + 1e-9));
            const std::optional<int> mm = m >= 1 ? std::optional<int>(m) : std::nullopt;
            plan.keys.push_back({n, mm, std::nullopt, "noback", std::nullopt});
            plan.keys.push_back({n, mm, std::nullopt, "proportional", std::nullopt});
            break;
        }
        case ExperimentKind::Oracle:
            plan.keys.push_back({n, std::nullopt, std::nullopt, "abs_gap", std::nullopt});
            plan.keys.push_back({n, std::nullopt, std::nullopt, "brute_force", std::nullopt});
            plan.keys.push_back({n, std::nullopt, std::nullopt, "conc_min", std::nullopt});
            break;
        }
        for (int rep = 0; rep < c.replications; ++rep) plan.cell_n.push_back(n);
    }
    plan.first_key = [ns, starts](int n) {
        return starts[std::find(ns.begin(), ns.end(), n) - ns.begin()];
    };
    plan.cell = [&c](int n, int, std::uint64_t cell_seed) -> std::vector<double> {
        switch (c.kind) {
        case ExperimentKind::Fig2a: return fig2a_cell(c, n, cell_seed);
        case ExperimentKind::Fig2b: return fig2b_cell(c, n, cell_seed);
        case ExperimentKind::Regret: return regret_cell(c, cell_seed);
        case ExperimentKind::Noback: return noback_cell(c, n, cell_seed);
        case ExperimentKind::Oracle: return oracle_cell(c, n, cell_seed);
        }
        return {};
    };
    return plan;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, int jobs)
{
    config.validate();
    const Plan plan = make_plan(config);
    const std::size_t cells = plan.cell_n.size();
    std::vector<std::vector<double>> values(cells);

    auto run_cell = [&](std::size_t k) {
        const int n = plan.cell_n[k];
        const int rep = static_cast<int>(k % static_cast<std::size_t>(config.replications));
        const std::uint64_t cell_seed = stream_seed(stream_seed(config.seed, static_cast<std::uint64_t>(n)), rep);
        values[k] = plan.cell(n, rep, cell_seed);
    };

    if (jobs <= 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    jobs = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(jobs), std::max<std::size_t>(cells, 1)));
    if (jobs <= 1) {
        for (std::size_t k = 0; k < cells; ++k) run_cell(k);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mu;
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j)
            pool.emplace_back([&] {
                for (std::size_t k = next++; k < cells; k = next++) {
                    try {
                        run_cell(k);
                    } catch (...) {
                        std::lock_guard lock(failure_mu);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }

    // gather per-key samples in cell order, so the result is independent of scheduling
    std::vector<std::vector<double>> samples(plan.keys.size());
    for (std::size_t k = 0; k < cells; ++k) {
        const std::size_t base = plan.first_key(plan.cell_n[k]);
        for (std::size_t v = 0; v < values[k].size(); ++v) samples[base + v].push_back(values[k][v]);
    }

    ExperimentResult res;
    for (std::size_t i = 0; i < plan.keys.size(); ++i) {
        const auto& key = plan.keys[i];
        const MeanStderr ms = mean_stderr(samples[i]);
        res.rows.push_back({to_string(config.kind), key.n, key.m, key.h, key.policy, key.T, config.replications,
                            config.seed, ms.mean, ms.stderr_});
    }
    return res;
}

namespace {

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

}  // namespace

void write_csv(std::ostream& os, const ExperimentConfig& config, const ExperimentResult& result)
{
    os << "# schema: " << kResultsSchema << '\n';
    std::istringstream echo(config.canonical());
    std::string line;
    while (std::getline(echo, line)) os << "# " << line << '\n';
    os << kResultsHeader << '\n';
    for (const auto& r : result.rows) {
        os << csv_field(r.experiment) << ',' << r.n << ',' << (r.m ? std::to_string(*r.m) : "") << ','
           << (r.h ? format_double(*r.h) : "") << ',' << csv_field(r.policy) << ','
           << (r.T ? std::to_string(*r.T) : "") << ',' << r.replications << ',' << r.seed << ','
           << format_double(r.cost_mean) << ',' << format_double(r.cost_stderr) << '\n';
    }
}

std::uint64_t config_hash(const ExperimentConfig& config)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : config.canonical()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void write_manifest(std::ostream& os, const ExperimentConfig& config, double wall_seconds)
{
    std::ostringstream hex;
    hex << std::hex << std::setw(16) << std::setfill('0') << config_hash(config);
    nlohmann::ordered_json j;
    j["schema"] = kResultsSchema;
    j["experiment"] = to_string(config.kind);
    j["config_hash"] = hex.str();
    j["version"] = STREAMALLOC_VERSION;
    j["wall_seconds"] = wall_seconds;
    j["effective_w"] = config.effective_w();
    os << j.dump(2) << '\n';
}

}  // namespace streamalloc
