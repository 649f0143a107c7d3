#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "streamalloc/allocator.hpp"
#include "streamalloc/experiments.hpp"
#include "streamalloc/noback.hpp"
#include "streamalloc/optimizer.hpp"

namespace py = pybind11;
using namespace streamalloc;

namespace {

using Frac = std::pair<std::int64_t, std::int64_t>;

Rational to_rational(const Frac& f)
{
    return Rational(f.first, f.second);
}

Frac to_frac(const Rational& r)
{
    return {r.numerator(), r.denominator()};
}

std::vector<UserProfile> make_users(const std::vector<std::int64_t>& z, std::int64_t Z, double theta, bool linear)
{
    std::vector<UserProfile> us;
    for (std::size_t i = 0; i < z.size(); ++i) {
        UserProfile u;
        u.id = static_cast<int>(i);
        u.p = GridProb(z[i], Z);
        u.cost = linear ? linear_cost(1.0, u.p) : power_law(theta, u.p);
        us.push_back(u);
    }
    return us;
}

RateVector to_rates(const std::vector<Frac>& alpha)
{
    RateVector r;
    for (const auto& a : alpha) r.alpha.push_back(to_rational(a));
    return r;
}

py::dict solution_dict(const ConcMinSolution& s)
{
    std::vector<Frac> alpha;
    for (const auto& a : s.rates.alpha) alpha.push_back(to_frac(a));
    py::dict d;
    d["alpha"] = alpha;
    d["cost"] = s.cost;
    d["fractional_user"] = s.fractional_user ? py::object(py::int_(*s.fractional_user)) : py::object(py::none());
    d["dp_cell_updates"] = s.dp_cell_updates;
    return d;
}

py::dict row_dict(const ResultRow& r)
{
    py::dict d;
    d["experiment"] = r.experiment;
    d["n"] = r.n;
    d["m"] = r.m ? py::object(py::int_(*r.m)) : py::object(py::none());
    d["h"] = r.h ? py::object(py::float_(*r.h)) : py::object(py::none());
    d["policy"] = r.policy;
    d["T"] = r.T ? py::object(py::int_(*r.T)) : py::object(py::none());
    d["replications"] = r.replications;
    d["seed"] = r.seed;
    d["cost_mean"] = r.cost_mean;
    d["cost_stderr"] = r.cost_stderr;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "streamalloc core";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    m.def(
        "conc_min",
        [](const std::vector<std::int64_t>& z, std::int64_t Z, const Frac& c, double theta, bool linear) {
            return solution_dict(conc_min(make_users(z, Z, theta, linear), to_rational(c)));
        },
        py::arg("z"), py::arg("Z"), py::arg("capacity"), py::arg("theta") = 0.5, py::arg("linear") = false);

    m.def(
        "brute_force_alpha",
        [](const std::vector<std::int64_t>& z, std::int64_t Z, const Frac& c, double theta, bool linear) {
            return solution_dict(brute_force_alpha(make_users(z, Z, theta, linear), to_rational(c)));
        },
        py::arg("z"), py::arg("Z"), py::arg("capacity"), py::arg("theta") = 0.5, py::arg("linear") = false);

    m.def(
        "subset_sum",
        [](const std::vector<std::int64_t>& z, std::int64_t Z, const Frac& c) {
            std::vector<GridProb> w;
            std::vector<int> pool;
            for (std::size_t i = 0; i < z.size(); ++i) {
                w.emplace_back(z[i], Z);
                pool.push_back(static_cast<int>(i));
            }
            const SubsetSumResult r = subset_sum(pool, w, to_rational(c));
            return std::make_pair(r.chosen, to_frac(r.total));
        },
        py::arg("z"), py::arg("Z"), py::arg("capacity"));

    m.def(
        "select_users",
        [](const std::vector<Frac>& alpha, int slots, std::uint64_t seed) {
            Rng rng(seed);
            return select_users(to_rates(alpha), slots, rng).slots;
        },
        py::arg("alpha"), py::arg("m"), py::arg("seed"));

    m.def(
        "max_matching",
        [](const std::vector<std::vector<int>>& adj, int right) {
            BipartiteGraph g;
            g.right = right;
            g.adj = adj;
            for (std::size_t i = 0; i < adj.size(); ++i) g.left_slot.push_back(static_cast<int>(i));
            return max_matching(g).pairs;
        },
        py::arg("adj"), py::arg("right"));

    m.def(
        "allocate_channels",
        [](const std::vector<Frac>& alpha, const std::vector<std::vector<bool>>& on, std::uint64_t seed) {
            const int n = static_cast<int>(on.size());
            const int ch = n ? static_cast<int>(on[0].size()) : 0;
            ChannelMatrix H(n, ch);
            for (int i = 0; i < n; ++i) {
                if (static_cast<int>(on[i].size()) != ch) throw std::invalid_argument("ragged channel matrix");
                for (int j = 0; j < ch; ++j) H.set(i, j, on[i][j]);
            }
            Rng rng(seed);
            const Allocation a = allocate_channels(to_rates(alpha), H, rng);
            py::dict d;
            d["served"] = a.served;
            d["selected"] = a.selected;
            d["channel_user"] = a.channel_user;
            d["matched"] = a.matched;
            return d;
        },
        py::arg("alpha"), py::arg("on"), py::arg("seed"));

    m.def(
        "noback_solve",
        [](const std::vector<double>& weights, const std::vector<std::pair<double, double>>& supports, const Frac& c) {
            if (weights.size() != supports.size()) throw std::invalid_argument("one support per weight required");
            NobackInstance inst;
            for (std::size_t i = 0; i < weights.size(); ++i)
                inst.users.push_back({weights[i], RateDistribution::uniform(supports[i].first, supports[i].second)});
            inst.capacity = to_rational(c);
            const NobackSolution s = noback_solve(inst);
            py::dict d;
            d["alpha"] = s.alpha;
            d["lambda"] = s.lambda;
            d["threshold"] = s.threshold;
            d["warnings"] = s.warnings;
            d["expected_cost"] = expected_cost(inst, s.alpha);
            return d;
        },
        py::arg("weights"), py::arg("supports"), py::arg("capacity"));

    m.def(
        "run_experiment",
        [](const std::string& kind, const std::string& config, int jobs) {
            std::istringstream is(config);
            const ExperimentConfig c = parse_config(is, parse_kind(kind));
            ExperimentResult r;
            {
                py::gil_scoped_release release;
                r = run_experiment(c, jobs);
            }
            py::list rows;
            for (const auto& row : r.rows) rows.append(row_dict(row));
            std::ostringstream csv;
            write_csv(csv, c, r);
            return std::make_pair(rows, csv.str());
        },
        py::arg("kind"), py::arg("config") = "", py::arg("jobs") = 1);

    m.attr("RESULTS_SCHEMA") = kResultsSchema;
    m.attr("RESULTS_HEADER") = kResultsHeader;
}
