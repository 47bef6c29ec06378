#pragma once

#include <complex>
#include <map>
#include <string>
#include <vector>

namespace hblab {

// Sectioned key-value text files, used for model descriptions and experiment
// configs:
//
//   family = ls
//   delta  = 0.3
//   [truncation]
//   n_max    = 100000
//   tail_tol = 1e-6
//
// Keys inside a [section] are addressed as "section.key". '#' starts a
// comment. Complex values are written as "x+yi" / "x-yi".
class KVFile {
public:
    KVFile() = default;

    static KVFile parse_file(const std::string& path);
    static KVFile parse_string(const std::string& text);

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key) const;
    long long get_int(const std::string& key, long long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    // comma-separated lists
    std::vector<double> get_doubles(const std::string& key) const;
    std::vector<std::complex<double>> get_complexes(const std::string& key) const;

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    const std::map<std::string, std::string>& items() const { return values_; }

    static std::complex<double> parse_complex(const std::string& s);

private:
    std::map<std::string, std::string> values_;
};

} // namespace hblab
