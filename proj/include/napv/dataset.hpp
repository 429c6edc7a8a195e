#pragma once

// Labeled dataset CSV: header `label,x0,...,x{d-1}`, one sample per row.

#include <charconv>
#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "napv/error.hpp"
#include "napv/nap.hpp"

namespace napv {

struct DatasetOptions {
    bool check_range = true; // reject values outside [0, 1]
    std::size_t expected_dim = 0; // 0 = take from the header
};

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line_no) {
    field = trim(field);
    T value{};
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw ParseError("dataset line " + std::to_string(line_no) + ": cannot parse '" + std::string(field) + "'");
    }
    return value;
}

} // namespace detail

[[nodiscard]] inline std::vector<LabeledSample> load_dataset(std::istream& in, const DatasetOptions& opts = {}) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("dataset: empty input");
    const auto header = detail::split_csv(detail::trim(line));
    if (header.size() < 2 || detail::trim(header[0]) != "label") {
        throw ParseError("dataset: header must start with 'label' followed by feature columns");
    }
    const std::size_t dim = header.size() - 1;
    if (opts.expected_dim != 0 && dim != opts.expected_dim) {
        throw DimensionError("dataset has " + std::to_string(dim) + " features, expected " + std::to_string(opts.expected_dim));
    }
    std::vector<LabeledSample> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = detail::trim(line);
        if (body.empty()) continue;
        const auto fields = detail::split_csv(body);
        if (fields.size() != dim + 1) {
            throw ParseError("dataset line " + std::to_string(line_no) + ": expected " + std::to_string(dim + 1) +
                             " fields, got " + std::to_string(fields.size()));
        }
        LabeledSample s;
        s.label = detail::parse_number<int>(fields[0], line_no);
        s.x.reserve(dim);
        for (std::size_t i = 1; i < fields.size(); ++i) {
            const double v = detail::parse_number<double>(fields[i], line_no);
            if (opts.check_range && !(v >= 0.0 && v <= 1.0)) {
                throw ValidationError("dataset line " + std::to_string(line_no) + ": value " + std::string(detail::trim(fields[i])) +
                                      " outside [0, 1]");
            }
            s.x.push_back(v);
        }
        out.push_back(std::move(s));
    }
    return out;
}

inline void save_dataset(std::ostream& out, std::span<const LabeledSample> data) {
    if (data.empty()) return;
    out << "label";
    for (std::size_t i = 0; i < data[0].x.size(); ++i) out << ",x" << i;
    out << '\n';
    out.precision(17);
    for (const auto& s : data) {
        out << s.label;
        for (double v : s.x) out << ',' << v;
        out << '\n';
    }
}

/// Inputs of the samples whose label equals `label`.
[[nodiscard]] inline std::vector<Vector> samples_with_label(std::span<const LabeledSample> data, int label) {
    std::vector<Vector> out;
    for (const auto& s : data) {
        if (s.label == label) out.push_back(s.x);
    }
    return out;
}

} // namespace napv
