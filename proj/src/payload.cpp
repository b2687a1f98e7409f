// SPDX-License-Identifier: Apache-2.0
#include "pipechain/payload.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "pipechain/codec.hpp"
#include "pipechain/entry.hpp"

namespace pipechain {

std::string parameter_name(Parameter p) {
    switch (p) {
        case Parameter::Temperature: return "temperature";
        case Parameter::Pressure: return "pressure";
        case Parameter::Moisture: return "moisture";
        case Parameter::Humidity: return "humidity";
    }
    return "other:" + std::to_string(static_cast<unsigned>(p));
}

std::optional<Parameter> parse_parameter(std::string_view s) {
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "temperature") return Parameter::Temperature;
    if (lower == "pressure") return Parameter::Pressure;
    if (lower == "moisture") return Parameter::Moisture;
    if (lower == "humidity") return Parameter::Humidity;
    std::string_view digits = lower;
    if (digits.starts_with("other:")) digits.remove_prefix(6);
    unsigned code = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), code);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || digits.empty() || code > 255) {
        return std::nullopt;
    }
    return static_cast<Parameter>(code);
}

Bytes RegisterSensorPayload::encode() const {
    if (sensor_principal_id.size() > kMaxPrincipalIdBytes) {
        throw EncodingError("sensor_principal_id exceeds 128 bytes");
    }
    Writer w;
    w.str(sensor_principal_id);
    return std::move(w).take();
}

RegisterSensorPayload RegisterSensorPayload::decode(ByteView bytes) {
    Reader r(bytes);
    RegisterSensorPayload p{r.str(kMaxPrincipalIdBytes)};
    r.expect_end();
    return p;
}

Bytes ReadingPayload::encode() const {
    if (unit.size() > kMaxUnitBytes) {
        throw EncodingError("unit exceeds 16 bytes");
    }
    Writer w;
    w.u8(static_cast<std::uint8_t>(parameter)).i64(value_scaled).str(unit).u64(source_timestamp);
    return std::move(w).take();
}

ReadingPayload ReadingPayload::decode(ByteView bytes) {
    Reader r(bytes);
    ReadingPayload p;
    p.parameter = static_cast<Parameter>(r.u8());
    p.value_scaled = r.i64();
    p.unit = r.str(kMaxUnitBytes);
    p.source_timestamp = r.u64();
    r.expect_end();
    return p;
}

}  // namespace pipechain
