#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "afmdp/mdp.hpp"

namespace afmdp {

/// Time series with strictly increasing timestamps (seconds since the Unix
/// epoch) and finite values.
struct CsvSeries {
    std::vector<std::int64_t> timestamps;
    std::vector<double> values;
    std::size_t size() const noexcept { return values.size(); }
    friend bool operator==(const CsvSeries&, const CsvSeries&) = default;
};

/// Integer epoch seconds or ISO-8601 "YYYY-MM-DD[THH:MM[:SS]][Z]".
std::int64_t parse_timestamp(const std::string& text);

/// Two-column `timestamp,value` CSV with a header row. Quoted fields follow
/// RFC 4180. Malformed rows raise ParseError with the line number.
CsvSeries read_series_csv(std::istream& in);
CsvSeries load_series_csv(const std::string& path);
void write_series_csv(std::ostream& out, const CsvSeries& series);
void save_series_csv(const std::string& path, const CsvSeries& series);

/// Bin of `value` for ascending edges e_0 < ... < e_B; values outside the
/// range fall into the end bins.
std::size_t bin_of(double value, const std::vector<double>& edges);

/// B equal-width bins spanning the series' range.
std::vector<double> equal_width_edges(const CsvSeries& series, std::size_t bins);
std::vector<double> bin_centers(const std::vector<double>& edges);

/// First-order transition frequencies between bins. Rows never visited get
/// add-one smoothing, which makes them uniform.
DenseMatrix estimate_chain(const CsvSeries& series, const std::vector<double>& edges);

struct WindSeriesParams {
    double price_mean = 40.0;
    double price_sd = 15.0;
    double price_phi = 0.95;
    double price_min = 0.0;
    double price_max = 150.0;
    double mismatch_mean = 0.0;
    double mismatch_sd = 60.0;
    double mismatch_phi = 0.9;
    double mismatch_min = -200.0;
    double mismatch_max = 200.0;
    std::int64_t start = 1577836800;  // 2020-01-01T00:00:00Z
    std::int64_t step = 300;
};

/// Clipped AR(1) price and mismatch series of exactly `length` points.
std::pair<CsvSeries, CsvSeries> synth_wind_data(std::uint64_t seed, std::size_t length,
                                                const WindSeriesParams& params = {});

}  // namespace afmdp
