#pragma once

#include <iosfwd>
#include <string>

#include "afmdp/mdp.hpp"

namespace afmdp {

// MDPv1 text format:
//
//   dims s:<d1,...,dn> a:<e1,...,em> gamma:<g>
//   <x> <r(x)> <P(s'_0|x)> <P(s'_1|x)> ...      (one line per pair x)
//
// Reals are printed with 17 significant digits so a write/read cycle is exact.

void write_mdp(std::ostream& out, const TabularMdp& mdp);
TabularMdp read_mdp(std::istream& in);

void save_mdp(const std::string& path, const TabularMdp& mdp);
TabularMdp load_mdp(const std::string& path);

/// "%.17g" rendering used by every text format in the project.
std::string format_real(double value);

/// "s:5,5 a:3" style dimension spec, shared with the scheme format.
std::string format_dims(const FactoredSpace& space);
FactoredSpace parse_dims(const std::string& state_token, const std::string& action_token);

}  // namespace afmdp
