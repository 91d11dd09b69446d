#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "afmdp/factorization.hpp"

namespace afmdp {

// SCHEMEv1 text format, one directive per line, '#' starts a comment:
//
//   DIMS s:5,5,5 a:5        (optional; binds the scheme to a space)
//   K 3
//   ZS 0: 0
//   ZP 0: 0
//   ...
//   L 3
//   ZR 0: 0
//   ...
//   DEFAULT 0
//
// Component and dimension indices are 0-based.

struct SchemeFile {
    FactorizationScheme scheme;
    std::optional<FactoredSpace> space;
};

SchemeFile read_scheme(std::istream& in);
void write_scheme(std::ostream& out, const FactorizationScheme& scheme,
                  const std::optional<FactoredSpace>& space = std::nullopt);

SchemeFile load_scheme(const std::string& path);
void save_scheme(const std::string& path, const FactorizationScheme& scheme,
                 const std::optional<FactoredSpace>& space = std::nullopt);

}  // namespace afmdp
