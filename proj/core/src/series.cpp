#include "afmdp/series.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "afmdp/errors.hpp"
#include "afmdp/rng.hpp"

namespace afmdp {

namespace {

// Days since 1970-01-01 of a proleptic Gregorian date (Howard Hinnant's
// days_from_civil).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

bool parse_int(std::string_view text, std::int64_t& out) {
    if (text.empty()) return false;
    const auto* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, out);
    return res.ec == std::errc() && res.ptr == end;
}

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

// Splits one CSV record. Returns false on an unterminated quote.
bool split_record(const std::string& line, std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
    }
    fields.push_back(std::move(field));
    return !quoted;
}

}  // namespace

std::int64_t parse_timestamp(const std::string& raw) {
    const std::string text = trim(raw);
    std::int64_t value = 0;
    if (parse_int(text, value)) return value;

    // YYYY-MM-DD[THH:MM[:SS]][Z]
    auto num = [&](std::size_t pos, std::size_t len) -> std::int64_t {
        std::int64_t v = 0;
        if (pos + len > text.size() || !parse_int(std::string_view(text).substr(pos, len), v)) {
            throw ParseError("invalid timestamp '" + text + "'");
        }
        return v;
    };
    auto expect = [&](std::size_t pos, char c) {
        if (pos >= text.size() || text[pos] != c) throw ParseError("invalid timestamp '" + text + "'");
    };
    expect(4, '-');
    expect(7, '-');
    const std::int64_t y = num(0, 4);
    const std::int64_t mo = num(5, 2);
    const std::int64_t d = num(8, 2);
    std::int64_t hh = 0, mm = 0, ss = 0;
    std::size_t pos = 10;
    if (pos < text.size() && (text[pos] == 'T' || text[pos] == ' ')) {
        hh = num(11, 2);
        expect(13, ':');
        mm = num(14, 2);
        pos = 16;
        if (pos < text.size() && text[pos] == ':') {
            ss = num(17, 2);
            pos = 19;
        }
    }
    if (pos < text.size() && text[pos] == 'Z') ++pos;
    if (pos != text.size() || mo < 1 || mo > 12 || d < 1 || d > 31 || hh > 23 || mm > 59 || ss > 60) {
        throw ParseError("invalid timestamp '" + text + "'");
    }
    return days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400 + hh * 3600 + mm * 60 + ss;
}

CsvSeries read_series_csv(std::istream& in) {
    CsvSeries series;
    std::string line;
    std::vector<std::string> fields;
    std::size_t line_no = 0;
    bool header = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (header) {
            header = false;
            continue;
        }
        if (trim(line).empty()) continue;
        auto fail = [&](const std::string& what) {
            throw ParseError("line " + std::to_string(line_no) + ": " + what);
        };
        if (!split_record(line, fields)) fail("unterminated quoted field");
        if (fields.size() != 2) fail("expected 2 fields, found " + std::to_string(fields.size()));
        std::int64_t t = 0;
        try {
            t = parse_timestamp(fields[0]);
        } catch (const ParseError& e) {
            fail(e.what());
        }
        const std::string v = trim(fields[1]);
        double value = 0.0;
        const auto res = std::from_chars(v.data(), v.data() + v.size(), value);
        if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(value)) {
            fail("invalid value '" + v + "'");
        }
        if (!series.timestamps.empty() && t <= series.timestamps.back()) fail("timestamps must strictly increase");
        series.timestamps.push_back(t);
        series.values.push_back(value);
    }
    if (header) throw ParseError("missing header row");
    return series;
}

CsvSeries load_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    return read_series_csv(in);
}

void write_series_csv(std::ostream& out, const CsvSeries& series) {
    out << "timestamp,value\n";
    char buf[64];
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto res = std::to_chars(buf, buf + sizeof buf, series.values[i]);
        out << series.timestamps[i] << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf)) << '\n';
    }
}

void save_series_csv(const std::string& path, const CsvSeries& series) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    write_series_csv(out, series);
}

std::size_t bin_of(double value, const std::vector<double>& edges) {
    if (edges.size() < 2) throw DomainError("need at least two bin edges");
    const std::size_t bins = edges.size() - 1;
    const auto it = std::upper_bound(edges.begin() + 1, edges.end() - 1, value);
    return std::min(static_cast<std::size_t>(it - (edges.begin() + 1)), bins - 1);
}

std::vector<double> equal_width_edges(const CsvSeries& series, std::size_t bins) {
    if (series.size() == 0) throw DomainError("empty series");
    if (bins == 0) throw DomainError("need at least one bin");
    const auto [lo_it, hi_it] = std::minmax_element(series.values.begin(), series.values.end());
    double lo = *lo_it;
    double hi = *hi_it;
    if (hi <= lo) hi = lo + 1.0;
    std::vector<double> edges(bins + 1);
    for (std::size_t b = 0; b <= bins; ++b) {
        edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
    }
    edges[bins] = hi;
    return edges;
}

std::vector<double> bin_centers(const std::vector<double>& edges) {
    std::vector<double> c;
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) c.push_back(0.5 * (edges[b] + edges[b + 1]));
    return c;
}

DenseMatrix estimate_chain(const CsvSeries& series, const std::vector<double>& edges) {
    if (series.size() == 0) throw DomainError("empty series");
    if (series.size() < 2) throw DomainError("need at least two observations");
    const std::size_t bins = edges.size() - 1;
    DenseMatrix counts(bins, bins);
    std::size_t prev = bin_of(series.values[0], edges);
    for (std::size_t i = 1; i < series.size(); ++i) {
        const std::size_t cur = bin_of(series.values[i], edges);
        counts(prev, cur) += 1.0;
        prev = cur;
    }
    for (std::size_t r = 0; r < bins; ++r) {
        auto row = counts.row(r);
        double total = 0.0;
        for (double c : row) total += c;
        if (total == 0.0) {
            for (double& c : row) c = 1.0;
            total = static_cast<double>(bins);
        }
        for (double& c : row) c /= total;
    }
    return counts;
}

std::pair<CsvSeries, CsvSeries> synth_wind_data(std::uint64_t seed, std::size_t length, const WindSeriesParams& p) {
    if (length < 100) throw DomainError("series length must be at least 100");
    CsvSeries price;
    CsvSeries mismatch;
    RandomStream price_rng(derive_seed(seed, {1}));
    RandomStream mismatch_rng(derive_seed(seed, {2}));
    const double price_noise = p.price_sd * std::sqrt(1.0 - p.price_phi * p.price_phi);
    const double mismatch_noise = p.mismatch_sd * std::sqrt(1.0 - p.mismatch_phi * p.mismatch_phi);
    double x = p.price_mean;
    double y = p.mismatch_mean;
    for (std::size_t t = 0; t < length; ++t) {
        x = p.price_mean + p.price_phi * (x - p.price_mean) + price_noise * price_rng.normal();
        y = p.mismatch_mean + p.mismatch_phi * (y - p.mismatch_mean) + mismatch_noise * mismatch_rng.normal();
        x = std::clamp(x, p.price_min, p.price_max);
        y = std::clamp(y, p.mismatch_min, p.mismatch_max);
        const std::int64_t ts = p.start + static_cast<std::int64_t>(t) * p.step;
        price.timestamps.push_back(ts);
        price.values.push_back(x);
        mismatch.timestamps.push_back(ts);
        mismatch.values.push_back(y);
    }
    return {std::move(price), std::move(mismatch)};
}

}  // namespace afmdp
