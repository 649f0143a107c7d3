#include "streamalloc/instance_io.hpp"

#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "streamalloc/format.hpp"

namespace streamalloc {

namespace {

constexpr const char* kInstanceHeader = "# streamalloc instance v1";
constexpr const char* kSolutionHeader = "# streamalloc solution v1";
constexpr const char* kNobackHeader = "# streamalloc noback v1";

std::int64_t parse_int(const std::string& s)
{
    std::int64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw FormatError("not an integer: '" + s + "'");
    return v;
}

double parse_double(const std::string& s)
{
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw FormatError("not a number: '" + s + "'");
    return v;
}

struct Record {
    std::string tag;
    std::vector<std::string> positional;
    std::map<std::string, std::string> keys;
    int line = 0;

    const std::string& key(const std::string& k) const
    {
        const auto it = keys.find(k);
        if (it == keys.end()) throw FormatError("line " + std::to_string(line) + ": missing key '" + k + "'");
        return it->second;
    }
};

// Reads the header line, then splits each remaining non-blank, non-comment line into a record.
std::vector<Record> read_records(std::istream& is, const char* header)
{
    std::string line;
    if (std::getline(is, line) && !line.empty() && line.back() == '\r') line.pop_back();
    if (!is || line != header) throw FormatError(std::string("expected header '") + header + "'");
    std::vector<Record> out;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        std::istringstream ss(line);
        Record r;
        r.line = lineno;
        ss >> r.tag;
        std::string tok;
        while (ss >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos)
                r.positional.push_back(tok);
            else
                r.keys[tok.substr(0, eq)] = tok.substr(eq + 1);
        }
        out.push_back(std::move(r));
    }
    return out;
}

void write_cost(std::ostream& os, const CostFunction& cost)
{
    if (const auto* pl = std::get_if<PowerLaw>(&cost.kind)) {
        os << " cost=power_law theta=" << format_double(pl->theta);
    } else if (const auto* li = std::get_if<Linear>(&cost.kind)) {
        os << " cost=linear slope=" << format_double(li->slope);
    } else {
        const auto& tb = std::get<TablePiecewise>(cost.kind);
        os << " cost=table points=";
        for (std::size_t k = 0; k < tb.breakpoints.size(); ++k) {
            if (k) os << ';';
            os << format_double(tb.breakpoints[k].first) << ':' << format_double(tb.breakpoints[k].second);
        }
    }
}

CostFunction read_cost(const Record& r, GridProb p)
{
    const std::string& kind = r.key("cost");
    if (kind == "power_law") return power_law(parse_double(r.key("theta")), p);
    if (kind == "linear") return linear_cost(parse_double(r.key("slope")), p);
    if (kind == "table") {
        TablePiecewise tb;
        std::istringstream ss(r.key("points"));
        std::string pair;
        while (std::getline(ss, pair, ';')) {
            const auto colon = pair.find(':');
            if (colon == std::string::npos) throw FormatError("table breakpoint needs x:v");
            tb.breakpoints.emplace_back(parse_double(pair.substr(0, colon)), parse_double(pair.substr(colon + 1)));
        }
        return {tb, p};
    }
    throw FormatError("unknown cost family '" + kind + "'");
}

int parse_user_index(const Record& r, std::size_t expected)
{
    if (r.positional.size() != 1) throw FormatError("line " + std::to_string(r.line) + ": user needs one index");
    const auto id = parse_int(r.positional[0]);
    if (id != static_cast<std::int64_t>(expected))
        throw FormatError("line " + std::to_string(r.line) + ": users must be numbered 0, 1, ... in order");
    return static_cast<int>(id);
}

}  // namespace

Rational parse_rational(const std::string& text)
{
    const auto slash = text.find('/');
    try {
        if (slash == std::string::npos) return Rational(parse_int(text));
        const auto den = parse_int(text.substr(slash + 1));
        if (den == 0) throw FormatError("zero denominator in '" + text + "'");
        return Rational(parse_int(text.substr(0, slash)), den);
    } catch (const boost::bad_rational&) {
        throw FormatError("bad rational '" + text + "'");
    }
}

void write_instance(std::ostream& os, const Instance& inst)
{
    os << kInstanceHeader << '\n';
    os << "capacity " << format_rational(inst.capacity) << '\n';
    for (std::size_t i = 0; i < inst.users.size(); ++i) {
        const auto& u = inst.users[i];
        os << "user " << i << " z=" << u.p.z() << " Z=" << u.p.Z();
        write_cost(os, u.cost);
        os << '\n';
    }
}

Instance read_instance(std::istream& is)
{
    Instance inst;
    bool have_capacity = false;
    for (const auto& r : read_records(is, kInstanceHeader)) {
        if (r.tag == "capacity") {
            if (r.positional.size() != 1) throw FormatError("capacity needs one value");
            inst.capacity = parse_rational(r.positional[0]);
            have_capacity = true;
        } else if (r.tag == "user") {
            UserProfile u;
            u.id = parse_user_index(r, inst.users.size());
            try {
                u.p = GridProb(parse_int(r.key("z")), parse_int(r.key("Z")));
            } catch (const std::invalid_argument& e) {
                throw FormatError(e.what());
            }
            u.cost = read_cost(r, u.p);
            inst.users.push_back(std::move(u));
        } else {
            throw FormatError("line " + std::to_string(r.line) + ": unknown record '" + r.tag + "'");
        }
    }
    if (!have_capacity) throw FormatError("instance has no capacity line");
    try {
        if (!inst.users.empty()) common_denominator(inst.users);
    } catch (const std::invalid_argument& e) {
        throw FormatError(e.what());
    }
    return inst;
}

void write_solution(std::ostream& os, const ConcMinSolution& sol)
{
    os << kSolutionHeader << '\n';
    os << "cost " << format_double(sol.cost) << '\n';
    for (std::size_t i = 0; i < sol.rates.alpha.size(); ++i) {
        const auto& a = sol.rates.alpha[i];
        os << "alpha " << i << ' ' << format_rational(a) << ' ' << format_double(to_double(a)) << '\n';
    }
}

ConcMinSolution read_solution(std::istream& is)
{
    ConcMinSolution sol;
    for (const auto& r : read_records(is, kSolutionHeader)) {
        if (r.tag == "cost") {
            if (r.positional.size() != 1) throw FormatError("cost needs one value");
            sol.cost = parse_double(r.positional[0]);
        } else if (r.tag == "alpha") {
            if (r.positional.size() < 2) throw FormatError("alpha needs an index and a fraction");
            if (parse_int(r.positional[0]) != static_cast<std::int64_t>(sol.rates.alpha.size()))
                throw FormatError("alpha lines must be in user order");
            sol.rates.alpha.push_back(parse_rational(r.positional[1]));
        } else {
            throw FormatError("line " + std::to_string(r.line) + ": unknown record '" + r.tag + "'");
        }
    }
    return sol;
}

void write_noback_instance(std::ostream& os, const NobackInstance& inst)
{
    os << kNobackHeader << '\n';
    os << "capacity " << format_rational(inst.capacity) << '\n';
    for (std::size_t i = 0; i < inst.users.size(); ++i) {
        const auto& u = inst.users[i];
        os << "user " << i << " weight=" << format_double(u.weight) << " a=" << format_double(u.dist.lo)
           << " b=" << format_double(u.dist.hi);
        if (u.dist.kind == RateDistribution::Kind::Uniform)
            os << " cdf=uniform";
        else
            os << " cdf=linear_density slope_density=" << format_double(u.dist.shape);
        os << '\n';
    }
}

NobackInstance read_noback_instance(std::istream& is)
{
    NobackInstance inst;
    bool have_capacity = false;
    for (const auto& r : read_records(is, kNobackHeader)) {
        if (r.tag == "capacity") {
            if (r.positional.size() != 1) throw FormatError("capacity needs one value");
            inst.capacity = parse_rational(r.positional[0]);
            have_capacity = true;
        } else if (r.tag == "user") {
            parse_user_index(r, inst.users.size());
            NobackUser u;
            u.weight = parse_double(r.key("weight"));
            const double a = parse_double(r.key("a"));
            const double b = parse_double(r.key("b"));
            const std::string& cdf = r.key("cdf");
            try {
                if (cdf == "uniform")
                    u.dist = RateDistribution::uniform(a, b);
                else if (cdf == "linear_density")
                    u.dist = RateDistribution::linear_density(a, b, parse_double(r.key("slope_density")));
                else
                    throw FormatError("unknown cdf '" + cdf + "'");
            } catch (const std::invalid_argument& e) {
                throw FormatError(e.what());
            }
            inst.users.push_back(std::move(u));
        } else {
            throw FormatError("line " + std::to_string(r.line) + ": unknown record '" + r.tag + "'");
        }
    }
    if (!have_capacity) throw FormatError("instance has no capacity line");
    return inst;
}

}  // namespace streamalloc
