// SPDX-License-Identifier: Apache-2.0
#pragma once

// Simulated data producers and the normalizer that maps their records onto
// canonical readings. Values travel as decimal text and are scaled to
// milli-units exactly; no binary floating point touches a reading.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pipechain/payload.hpp"

namespace pipechain::harness {

enum class Format { JsonLines, Csv, KeyValueText };

std::string_view format_name(Format f);
std::optional<Format> parse_format(std::string_view s);

inline constexpr std::uint64_t kMaxRateMilliHz = 100'000;

/// base + amplitude * sin(2*pi*k/period) + uniform noise in [-noise, noise],
/// all in milli-units.
struct ValueModel {
    std::int64_t base = 0;
    std::int64_t amplitude = 0;
    std::int64_t noise = 0;
    std::uint64_t period = 60;
    std::uint64_t noise_seed = 0;
};

struct ProducerSpec {
    std::string producer_id;
    Format format = Format::Csv;
    Parameter parameter = Parameter::Temperature;
    std::string unit = "C";
    /// Messages per second times 1000.
    std::uint64_t rate_millihz = 1000;
    ValueModel value_model;
    /// "derive:<label>", "seed:<hex>" or "token:<secret>".
    std::string principal;
    /// Every n-th record is emitted without its value field; 0 disables.
    std::uint64_t corrupt_every = 0;
};

/// Throws std::invalid_argument when the spec cannot run.
void validate(const ProducerSpec& spec);

/// Inclusive plausible range in milli-units.
std::pair<std::int64_t, std::int64_t> plausible_range(Parameter p);

struct Reading {
    std::string producer_id;
    Parameter parameter = Parameter::Temperature;
    std::int64_t value_scaled = 0;
    std::string unit;
    std::uint64_t source_timestamp = 0;

    bool operator==(const Reading&) const = default;
};

struct RawRecord {
    std::string producer_id;
    Format format = Format::Csv;
    std::uint64_t seq = 0;
    std::string line;
};

/// The k-th value of the model, clamped to the parameter's plausible range.
std::int64_t model_value(const ProducerSpec& spec, std::uint64_t k);

/// Deterministic record stream: record k carries source timestamp
/// start + floor(k * 1000 / rate_millihz).
std::vector<RawRecord> run_producer(const ProducerSpec& spec, std::uint64_t count, std::uint64_t start_timestamp);

/// One record in `format`.
std::string render(const Reading& r, Format format);

struct ParseError {
    std::uint64_t line = 0;
    std::string reason;
};

std::variant<Reading, ParseError> normalize(const RawRecord& raw);
std::variant<Reading, ParseError> normalize(std::string_view line, Format format, std::uint64_t line_no = 0);

/// Decimal text to milli-units, rounding half away from zero.
std::optional<std::int64_t> scale_decimal(std::string_view text);
/// Milli-units to the shortest decimal text that scales back exactly.
std::string format_scaled(std::int64_t value_scaled);

}  // namespace pipechain::harness
