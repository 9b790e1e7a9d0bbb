#ifndef EQADAPT_FORMAT_HPP
#define EQADAPT_FORMAT_HPP

#include <array>
#include <charconv>
#include <cmath>
#include <string>

namespace eqadapt
{

/// Locale-independent shortest-round-trip-safe rendering with 17
/// significant digits.
inline std::string format_double(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    std::array<char, 32> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
    return std::string(buf.data(), end);
}

} // namespace eqadapt

#endif
