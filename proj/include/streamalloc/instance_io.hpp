#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "streamalloc/model.hpp"
#include "streamalloc/noback.hpp"
#include "streamalloc/optimizer.hpp"

// Line-oriented text records. Instance:
//
//   # streamalloc instance v1
//   capacity 8/5
//   user 0 z=8 Z=20 cost=power_law theta=0.5
//   user 1 z=9 Z=20 cost=linear slope=1
//
// Noback files use the header `# streamalloc noback v1` and user keys weight=, a=, b= with
// cdf=uniform or cdf=linear_density slope_density=. Solutions (`# streamalloc solution v1`)
// list one `alpha <user> <num/den> <decimal>` line per user after a `cost` line.

namespace streamalloc {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Instance {
    std::vector<UserProfile> users;
    Rational capacity{1};
};

void write_instance(std::ostream& os, const Instance& inst);
Instance read_instance(std::istream& is);

void write_solution(std::ostream& os, const ConcMinSolution& sol);
ConcMinSolution read_solution(std::istream& is);

void write_noback_instance(std::ostream& os, const NobackInstance& inst);
NobackInstance read_noback_instance(std::istream& is);

Rational parse_rational(const std::string& text);

}  // namespace streamalloc
