// SPDX-License-Identifier: Apache-2.0
#pragma once

// Action-specific payload encodings carried inside LedgerEntry::payload.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "pipechain/bytes.hpp"

namespace pipechain {

/// Measured parameter. Codes 0-3 are named; any other code is Other(code).
enum class Parameter : std::uint8_t {
    Temperature = 0,
    Pressure = 1,
    Moisture = 2,
    Humidity = 3,
};

/// "temperature", "pressure", "moisture", "humidity" or "other:<code>".
std::string parameter_name(Parameter p);
/// Accepts the names above (case-insensitive) or a bare decimal code.
std::optional<Parameter> parse_parameter(std::string_view s);

inline constexpr std::int64_t kMaxAbsScaledValue = std::int64_t{1} << 62;

struct RegisterSensorPayload {
    std::string sensor_principal_id;

    Bytes encode() const;
    static RegisterSensorPayload decode(ByteView bytes);
    bool operator==(const RegisterSensorPayload&) const = default;
};

/// A reading in milli-units.
struct ReadingPayload {
    Parameter parameter = Parameter::Temperature;
    std::int64_t value_scaled = 0;
    std::string unit;
    std::uint64_t source_timestamp = 0;

    Bytes encode() const;
    static ReadingPayload decode(ByteView bytes);
    bool operator==(const ReadingPayload&) const = default;
};

}  // namespace pipechain
