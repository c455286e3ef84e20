#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

namespace geoinv::io {

/// Round-trip decimal form of a double; the basis of byte-identical CSV output.
inline std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Minimal CSV emitter: header on construction, one call per row.
class CsvWriter {
public:
    CsvWriter(std::ostream& os, const std::vector<std::string>& header) : os_(os)
    {
        for (std::size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
        os_ << '\n';
    }

    template <typename... Ts>
    void row(const Ts&... values)
    {
        bool first = true;
        ((os_ << (first ? "" : ",") << cell(values), first = false), ...);
        os_ << '\n';
    }

    /// Row of preformatted cells, for variable-width tables.
    void cells(const std::vector<std::string>& values)
    {
        for (std::size_t i = 0; i < values.size(); ++i) os_ << (i ? "," : "") << values[i];
        os_ << '\n';
    }

private:
    template <typename T>
    static std::string cell(const T& v)
    {
        if constexpr (std::is_floating_point_v<T>)
            return format_double(static_cast<double>(v));
        else if constexpr (std::is_integral_v<T>)
            return std::to_string(v);
        else
            return std::string(v);
    }

    std::ostream& os_;
};

}  // namespace geoinv::io
