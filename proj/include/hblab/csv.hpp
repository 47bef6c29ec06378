#pragma once

#include <complex>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace hblab {

// Fixed "%.12g" formatting keeps CSV output byte-identical for identical
// doubles regardless of locale or stream state.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline std::string fmt(std::complex<double> z) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%.12g%+.12gi", z.real(), z.imag());
    return buf;
}

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : out_(path) {
        if (!out_) throw std::runtime_error("cannot open for writing: " + path);
    }

    void row(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    void row(std::initializer_list<std::string> cells) {
        row(std::vector<std::string>(cells));
    }

private:
    std::ofstream out_;
};

} // namespace hblab
