// SPDX-License-Identifier: Apache-2.0
#include "pipechain/harness/producer.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "json.hpp"
#include "pipechain/entry.hpp"

namespace pipechain::harness {

using json = nlohmann::json;

namespace {

bool valid_id(std::string_view s) {
    if (s.empty() || s.size() > 64) return false;
    for (char c : s) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) return false;
    }
    return true;
}

bool valid_unit(std::string_view s) {
    if (s.empty() || s.size() > kMaxUnitBytes) return false;
    for (char c : s) {
        if (c == ',' || c == '"' || c == '\\' || static_cast<unsigned char>(c) <= ' ') return false;
    }
    return true;
}

std::optional<std::uint64_t> parse_u64(std::string_view s) {
    std::uint64_t v = 0;
    if (s.empty()) return std::nullopt;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    for (;;) {
        std::size_t j = s.find(sep, i);
        out.push_back(s.substr(i, j == std::string_view::npos ? std::string_view::npos : j - i));
        if (j == std::string_view::npos) break;
        i = j + 1;
    }
    return out;
}

std::string render_record(const Reading& r, Format format, bool with_value);

ParseError err(std::uint64_t line, std::string reason) { return ParseError{line, std::move(reason)}; }

struct Fields {
    std::optional<std::string> producer, parameter, value, unit, timestamp;
};

std::variant<Reading, ParseError> finish(const Fields& f, std::uint64_t line) {
    if (!f.producer || !valid_id(*f.producer)) return err(line, "missing or invalid producer");
    if (!f.parameter) return err(line, "missing parameter");
    auto param = parse_parameter(*f.parameter);
    if (!param) return err(line, "unknown parameter '" + *f.parameter + "'");
    if (!f.value) return err(line, "missing value");
    auto scaled = scale_decimal(*f.value);
    if (!scaled) return err(line, "value '" + *f.value + "' is not a decimal number");
    if (!f.unit || !valid_unit(*f.unit)) return err(line, "missing or invalid unit");
    if (!f.timestamp) return err(line, "missing timestamp");
    auto ts = parse_u64(*f.timestamp);
    if (!ts) return err(line, "timestamp '" + *f.timestamp + "' is not Unix seconds");
    return Reading{*f.producer, *param, *scaled, *f.unit, *ts};
}

std::variant<Reading, ParseError> parse_csv(std::string_view line, std::uint64_t no) {
    auto cols = split(line, ',');
    if (cols.size() != 5) return err(no, "expected 5 comma-separated fields, got " + std::to_string(cols.size()));
    Fields f;
    f.producer = std::string(cols[0]);
    f.parameter = std::string(cols[1]);
    if (!cols[2].empty()) f.value = std::string(cols[2]);
    f.unit = std::string(cols[3]);
    f.timestamp = std::string(cols[4]);
    return finish(f, no);
}

std::variant<Reading, ParseError> parse_kv(std::string_view line, std::uint64_t no) {
    Fields f;
    for (auto tok : split(line, ' ')) {
        if (tok.empty()) continue;
        auto eq = tok.find('=');
        if (eq == std::string_view::npos) return err(no, "token without '='");
        std::string key(tok.substr(0, eq));
        std::string value(tok.substr(eq + 1));
        std::optional<std::string>* slot = nullptr;
        if (key == "producer") slot = &f.producer;
        else if (key == "parameter") slot = &f.parameter;
        else if (key == "value") slot = &f.value;
        else if (key == "unit") slot = &f.unit;
        else if (key == "timestamp") slot = &f.timestamp;
        else return err(no, "unknown key '" + key + "'");
        if (*slot) return err(no, "duplicate key '" + key + "'");
        *slot = std::move(value);
    }
    return finish(f, no);
}

std::optional<std::string> json_scalar_text(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return v.dump();
    if (v.is_number_float()) {
        // Shortest round-trip text recovers the decimal the producer wrote.
        char buf[64];
        auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v.get<double>());
        if (ec != std::errc()) return std::nullopt;
        return std::string(buf, p);
    }
    return std::nullopt;
}

std::variant<Reading, ParseError> parse_json(std::string_view line, std::uint64_t no) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return err(no, "not a JSON object");
    Fields f;
    for (const auto& [key, value] : j.items()) {
        std::optional<std::string> text = json_scalar_text(value);
        if (!text) return err(no, "field '" + key + "' must be a string or number");
        if (key == "producer") f.producer = text;
        else if (key == "parameter") f.parameter = text;
        else if (key == "value") f.value = text;
        else if (key == "unit") f.unit = text;
        else if (key == "timestamp") f.timestamp = text;
        else return err(no, "unknown field '" + key + "'");
    }
    return finish(f, no);
}

}  // namespace

std::string_view format_name(Format f) {
    switch (f) {
        case Format::JsonLines: return "jsonl";
        case Format::Csv: return "csv";
        case Format::KeyValueText: return "kv";
    }
    return "unknown";
}

std::optional<Format> parse_format(std::string_view s) {
    for (Format f : {Format::JsonLines, Format::Csv, Format::KeyValueText}) {
        if (s == format_name(f)) return f;
    }
    return std::nullopt;
}

std::pair<std::int64_t, std::int64_t> plausible_range(Parameter p) {
    switch (p) {
        case Parameter::Temperature: return {-90'000, 70'000};
        case Parameter::Pressure: return {0, 100'000'000};
        case Parameter::Moisture: return {0, 100'000};
        case Parameter::Humidity: return {0, 100'000};
    }
    return {-kMaxAbsScaledValue, kMaxAbsScaledValue};
}

void validate(const ProducerSpec& s) {
    auto fail = [&s](const std::string& why) { throw std::invalid_argument("producer " + s.producer_id + ": " + why); };
    if (!valid_id(s.producer_id)) fail("id must be 1-64 of [A-Za-z0-9._-]");
    if (s.rate_millihz == 0 || s.rate_millihz > kMaxRateMilliHz) fail("rate must be in (0, 100] Hz");
    if (!valid_unit(s.unit)) fail("unit must be 1-16 bytes without spaces, commas or quotes");
    if (s.principal.empty()) fail("principal is required");
    const auto& m = s.value_model;
    if (m.amplitude < 0 || m.noise < 0) fail("amplitude and noise must be non-negative");
    if (m.period == 0) fail("period must be positive");
    auto [lo, hi] = plausible_range(s.parameter);
    if (m.base < lo || m.base > hi) fail("base outside the plausible range for " + parameter_name(s.parameter));
    if (m.amplitude > hi - lo || m.noise > hi - lo) fail("amplitude or noise exceeds the plausible range");
}

std::int64_t model_value(const ProducerSpec& spec, std::uint64_t k) {
    const auto& m = spec.value_model;
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(k % m.period) / static_cast<double>(m.period);
    std::int64_t v = m.base + std::llround(static_cast<double>(m.amplitude) * std::sin(phase));
    if (m.noise > 0) {
        std::mt19937_64 rng(m.noise_seed ^ (0x9E3779B97F4A7C15ULL * (k + 1)));
        const std::uint64_t span = static_cast<std::uint64_t>(m.noise) * 2 + 1;
        v += static_cast<std::int64_t>(rng() % span) - m.noise;
    }
    auto [lo, hi] = plausible_range(spec.parameter);
    return std::clamp(v, lo, hi);
}

std::vector<RawRecord> run_producer(const ProducerSpec& spec, std::uint64_t count, std::uint64_t start_timestamp) {
    validate(spec);
    std::vector<RawRecord> out;
    out.reserve(count);
    for (std::uint64_t k = 0; k < count; ++k) {
        Reading r{spec.producer_id, spec.parameter, model_value(spec, k), spec.unit,
                  start_timestamp + k * 1000 / spec.rate_millihz};
        const bool corrupt = spec.corrupt_every != 0 && (k + 1) % spec.corrupt_every == 0;
        RawRecord raw{spec.producer_id, spec.format, k, render_record(r, spec.format, !corrupt)};
        out.push_back(std::move(raw));
    }
    return out;
}

std::string render(const Reading& r, Format format) { return render_record(r, format, true); }

namespace {

std::string render_record(const Reading& r, Format format, bool with_value) {
    const std::string v = format_scaled(r.value_scaled);
    const std::string p = parameter_name(r.parameter);
    const std::string ts = std::to_string(r.source_timestamp);
    switch (format) {
        case Format::Csv: return r.producer_id + "," + p + "," + (with_value ? v : "") + "," + r.unit + "," + ts;
        case Format::KeyValueText:
            return "producer=" + r.producer_id + " parameter=" + p + (with_value ? " value=" + v : "") +
                   " unit=" + r.unit + " timestamp=" + ts;
        case Format::JsonLines:
            return "{\"producer\":" + json(r.producer_id).dump() + ",\"parameter\":" + json(p).dump() +
                   (with_value ? ",\"value\":" + v : "") + ",\"unit\":" + json(r.unit).dump() +
                   ",\"timestamp\":" + ts + "}";
    }
    return {};
}

}  // namespace

std::variant<Reading, ParseError> normalize(const RawRecord& raw) {
    return normalize(raw.line, raw.format, raw.seq + 1);
}

std::variant<Reading, ParseError> normalize(std::string_view line, Format format, std::uint64_t line_no) {
    switch (format) {
        case Format::Csv: return parse_csv(line, line_no);
        case Format::KeyValueText: return parse_kv(line, line_no);
        case Format::JsonLines: return parse_json(line, line_no);
    }
    return err(line_no, "unknown format");
}

std::optional<std::int64_t> scale_decimal(std::string_view s) {
    std::size_t i = 0;
    bool negative = false;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) negative = s[i++] == '-';
    std::string digits;
    int exponent = 0;
    bool any = false;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) digits += s[i++], any = true;
    if (i < s.size() && s[i] == '.') {
        ++i;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) digits += s[i++], --exponent, any = true;
    }
    if (!any) return std::nullopt;
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        ++i;
        int e = 0;
        auto [p, ec] = std::from_chars(s.data() + i + (i < s.size() && s[i] == '+' ? 1 : 0), s.data() + s.size(), e);
        if (ec != std::errc() || p != s.data() + s.size() || e > 40 || e < -400) return std::nullopt;
        exponent += e;
        i = s.size();
    }
    if (i != s.size()) return std::nullopt;

    // value * 1000 = digits * 10^(exponent + 3)
    exponent += 3;
    std::size_t first = digits.find_first_not_of('0');
    if (first == std::string::npos) return 0;
    digits.erase(0, first);
    bool round_up = false;
    if (exponent < 0) {
        std::size_t drop = static_cast<std::size_t>(-exponent);
        if (drop > digits.size()) {
            digits.clear();
        } else {
            round_up = digits[digits.size() - drop] >= '5';
            digits.resize(digits.size() - drop);
        }
        exponent = 0;
    }
    if (digits.size() + static_cast<std::size_t>(exponent) > 19) return std::nullopt;
    unsigned __int128 mag = 0;
    for (char c : digits) mag = mag * 10 + static_cast<unsigned>(c - '0');
    for (int k = 0; k < exponent; ++k) mag *= 10;
    if (round_up) mag += 1;
    if (mag > static_cast<unsigned __int128>(kMaxAbsScaledValue)) return std::nullopt;
    std::int64_t v = static_cast<std::int64_t>(mag);
    return negative ? -v : v;
}

std::string format_scaled(std::int64_t v) {
    const bool negative = v < 0;
    std::uint64_t mag = negative ? static_cast<std::uint64_t>(-(v + 1)) + 1 : static_cast<std::uint64_t>(v);
    std::string out = std::to_string(mag / 1000);
    std::uint64_t frac = mag % 1000;
    if (frac != 0) {
        std::string f = std::to_string(frac);
        f.insert(0, 3 - f.size(), '0');
        while (f.back() == '0') f.pop_back();
        out += "." + f;
    }
    return negative ? "-" + out : out;
}

}  // namespace pipechain::harness
