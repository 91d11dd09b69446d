#include "afmdp/mdp_io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "afmdp/errors.hpp"

namespace afmdp {

namespace {

std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& what) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        char* end = nullptr;
        errno = 0;
        const unsigned long long value = std::strtoull(item.c_str(), &end, 10);
        if (item.empty() || *end != '\0' || errno != 0 || item.front() == '-') {
            throw ParseError("bad " + what + " entry '" + item + "'");
        }
        out.push_back(static_cast<std::size_t>(value));
    }
    if (out.empty()) throw ParseError("empty " + what + " list");
    return out;
}

std::string strip_prefix(const std::string& token, const std::string& prefix) {
    if (token.rfind(prefix, 0) != 0) throw ParseError("expected '" + prefix + "...' but got '" + token + "'");
    return token.substr(prefix.size());
}

double parse_real(const std::string& token, std::size_t line) {
    char* end = nullptr;
    errno = 0;
    const double value = std::strtod(token.c_str(), &end);
    if (token.empty() || *end != '\0' || errno == ERANGE) {
        throw ParseError("line " + std::to_string(line) + ": bad real '" + token + "'");
    }
    return value;
}

}  // namespace

std::string format_real(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::string format_dims(const FactoredSpace& space) {
    std::string out = "s:";
    for (std::size_t i = 0; i < space.num_state_dims(); ++i) {
        if (i) out += ',';
        out += std::to_string(space.state_dims()[i]);
    }
    out += " a:";
    for (std::size_t i = 0; i < space.num_action_dims(); ++i) {
        if (i) out += ',';
        out += std::to_string(space.action_dims()[i]);
    }
    return out;
}

FactoredSpace parse_dims(const std::string& state_token, const std::string& action_token) {
    return FactoredSpace(parse_size_list(strip_prefix(state_token, "s:"), "state dimension"),
                         parse_size_list(strip_prefix(action_token, "a:"), "action dimension"));
}

void write_mdp(std::ostream& out, const TabularMdp& mdp) {
    out << "dims " << format_dims(mdp.space()) << " gamma:" << format_real(mdp.gamma()) << '\n';
    const auto& kernel = mdp.kernel();
    for (std::size_t x = 0; x < kernel.rows(); ++x) {
        out << x << ' ' << format_real(mdp.reward()[x]);
        for (double p : kernel.row(x)) out << ' ' << format_real(p);
        out << '\n';
    }
}

TabularMdp read_mdp(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("line 1: missing MDPv1 header");
    std::istringstream header(line);
    std::string tag, s_tok, a_tok, g_tok, extra;
    header >> tag >> s_tok >> a_tok >> g_tok;
    if (tag != "dims" || g_tok.empty() || (header >> extra)) throw ParseError("line 1: malformed MDPv1 header");
    FactoredSpace space = parse_dims(s_tok, a_tok);
    const double gamma = parse_real(strip_prefix(g_tok, "gamma:"), 1);

    const std::size_t pairs = space.num_pairs();
    const std::size_t states = space.num_states();
    DenseMatrix kernel(pairs, states);
    std::vector<double> reward(pairs);
    std::vector<bool> seen(pairs, false);
    std::size_t line_no = 1;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string token;
        row >> token;
        const double x_real = parse_real(token, line_no);
        const auto x = static_cast<std::size_t>(x_real);
        if (x_real < 0 || static_cast<double>(x) != x_real || x >= pairs || seen[x]) {
            throw ParseError("line " + std::to_string(line_no) + ": bad or repeated pair index");
        }
        seen[x] = true;
        if (!(row >> token)) throw ParseError("line " + std::to_string(line_no) + ": missing reward");
        reward[x] = parse_real(token, line_no);
        for (std::size_t s = 0; s < states; ++s) {
            if (!(row >> token)) throw ParseError("line " + std::to_string(line_no) + ": too few probabilities");
            kernel(x, s) = parse_real(token, line_no);
        }
        if (row >> token) throw ParseError("line " + std::to_string(line_no) + ": too many fields");
        ++rows;
    }
    if (rows != pairs) throw ParseError("expected " + std::to_string(pairs) + " pair lines, got " + std::to_string(rows));
    return TabularMdp(std::move(space), std::move(kernel), std::move(reward), gamma);
}

void save_mdp(const std::string& path, const TabularMdp& mdp) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_mdp(out, mdp);
}

TabularMdp load_mdp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    return read_mdp(in);
}

}  // namespace afmdp
