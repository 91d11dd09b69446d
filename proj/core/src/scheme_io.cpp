#include "afmdp/scheme_io.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "afmdp/errors.hpp"
#include "afmdp/mdp_io.hpp"

namespace afmdp {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& what) {
    throw ParseError("line " + std::to_string(line) + ": " + what);
}

std::size_t parse_index(const std::string& token, std::size_t line) {
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(token.c_str(), &end, 10);
    if (token.empty() || *end != '\0' || errno != 0 || token.front() == '-') fail(line, "bad integer '" + token + "'");
    return static_cast<std::size_t>(v);
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Parses "<k>: i,j,..." into (k, scope).
std::pair<std::size_t, Scope> parse_scope_line(const std::string& rest, std::size_t line) {
    const auto colon = rest.find(':');
    if (colon == std::string::npos) fail(line, "expected '<index>: <dims>'");
    const std::size_t k = parse_index(trim(rest.substr(0, colon)), line);
    Scope scope;
    std::stringstream ss(rest.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        scope.push_back(parse_index(item, line));
    }
    return {k, normalize_scope(std::move(scope))};
}

void store(std::vector<Scope>& scopes, std::vector<bool>& seen, std::size_t k, Scope scope, std::size_t line,
           const char* tag) {
    if (k >= scopes.size()) fail(line, std::string(tag) + " index " + std::to_string(k) + " out of range");
    if (seen[k]) fail(line, std::string(tag) + " " + std::to_string(k) + " given twice");
    scopes[k] = std::move(scope);
    seen[k] = true;
}

std::string join(const Scope& scope) {
    std::string out;
    for (std::size_t i = 0; i < scope.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(scope[i]);
    }
    return out;
}

}  // namespace

SchemeFile read_scheme(std::istream& in) {
    SchemeFile file;
    auto& tr = file.scheme.transition;
    auto& rw = file.scheme.reward;
    std::vector<bool> seen_zs, seen_zp, seen_zr;
    bool have_k = false, have_l = false, have_default = false;

    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (text.empty()) continue;
        std::istringstream ls(text);
        std::string tag;
        ls >> tag;
        std::string rest;
        std::getline(ls, rest);
        rest = trim(rest);

        if (tag == "DIMS") {
            std::istringstream ds(rest);
            std::string s_tok, a_tok;
            ds >> s_tok >> a_tok;
            try {
                file.space = parse_dims(s_tok, a_tok);
            } catch (const Error& e) {
                fail(line, e.what());
            }
        } else if (tag == "K") {
            if (have_k) fail(line, "K given twice");
            const std::size_t K = parse_index(rest, line);
            tr.state_scopes.assign(K, {});
            tr.input_scopes.assign(K, {});
            seen_zs.assign(K, false);
            seen_zp.assign(K, false);
            have_k = true;
        } else if (tag == "L") {
            if (have_l) fail(line, "L given twice");
            const std::size_t L = parse_index(rest, line);
            rw.scopes.assign(L, {});
            seen_zr.assign(L, false);
            have_l = true;
        } else if (tag == "ZS" || tag == "ZP") {
            if (!have_k) fail(line, tag + " before K");
            auto [k, scope] = parse_scope_line(rest, line);
            if (tag == "ZS") store(tr.state_scopes, seen_zs, k, std::move(scope), line, "ZS");
            else store(tr.input_scopes, seen_zp, k, std::move(scope), line, "ZP");
        } else if (tag == "ZR") {
            if (!have_l) fail(line, "ZR before L");
            auto [i, scope] = parse_scope_line(rest, line);
            store(rw.scopes, seen_zr, i, std::move(scope), line, "ZR");
        } else if (tag == "DEFAULT") {
            file.scheme.x_default = parse_index(rest, line);
            have_default = true;
        } else {
            fail(line, "unknown directive '" + tag + "'");
        }
    }
    if (!have_k) throw ParseError("scheme has no K line");
    if (!have_l) throw ParseError("scheme has no L line");
    if (!have_default) throw ParseError("scheme has no DEFAULT line");
    for (std::size_t k = 0; k < seen_zs.size(); ++k) {
        if (!seen_zs[k] || !seen_zp[k]) throw ParseError("component " + std::to_string(k) + " missing ZS or ZP");
    }
    for (std::size_t i = 0; i < seen_zr.size(); ++i) {
        if (!seen_zr[i]) throw ParseError("reward component " + std::to_string(i) + " missing ZR");
    }
    if (file.space) require_valid(file.scheme, *file.space);
    return file;
}

void write_scheme(std::ostream& out, const FactorizationScheme& scheme, const std::optional<FactoredSpace>& space) {
    if (space) out << "DIMS " << format_dims(*space) << '\n';
    const auto& tr = scheme.transition;
    out << "K " << tr.size() << '\n';
    for (std::size_t k = 0; k < tr.size(); ++k) {
        out << "ZS " << k << ": " << join(tr.state_scopes[k]) << '\n';
        out << "ZP " << k << ": " << join(tr.input_scopes[k]) << '\n';
    }
    out << "L " << scheme.reward.size() << '\n';
    for (std::size_t i = 0; i < scheme.reward.size(); ++i) {
        out << "ZR " << i << ": " << join(scheme.reward.scopes[i]) << '\n';
    }
    out << "DEFAULT " << scheme.x_default << '\n';
}

SchemeFile load_scheme(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    return read_scheme(in);
}

void save_scheme(const std::string& path, const FactorizationScheme& scheme, const std::optional<FactoredSpace>& space) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_scheme(out, scheme, space);
}

}  // namespace afmdp
