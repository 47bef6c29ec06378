#include "hblab/kvfile.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hblab/hb_model.hpp"

namespace hblab {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || c == ';') {
            if (!trim(cur).empty()) out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!trim(cur).empty()) out.push_back(trim(cur));
    return out;
}

} // namespace

KVFile KVFile::parse_string(const std::string& text) {
    KVFile kv;
    std::istringstream in(text);
    std::string line, section;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("malformed config line: " + line);
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (!section.empty()) key = section + "." + key;
        kv.values_[key] = val;
    }
    return kv;
}

KVFile KVFile::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
}

std::string KVFile::get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw std::runtime_error("missing config key: " + key);
    return it->second;
}

std::string KVFile::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double KVFile::get_double(const std::string& key) const {
    return std::strtod(get_string(key).c_str(), nullptr);
}

double KVFile::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : std::strtod(it->second.c_str(), nullptr);
}

long long KVFile::get_int(const std::string& key) const {
    return std::strtoll(get_string(key).c_str(), nullptr, 10);
}

long long KVFile::get_int(const std::string& key, long long fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : std::strtoll(it->second.c_str(), nullptr, 10);
}

bool KVFile::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    return v == "1" || v == "true" || v == "yes" || v == "on";
}

std::vector<double> KVFile::get_doubles(const std::string& key) const {
    std::vector<double> out;
    for (const auto& tok : split_list(get_string(key)))
        out.push_back(std::strtod(tok.c_str(), nullptr));
    return out;
}

std::complex<double> KVFile::parse_complex(const std::string& s) {
    // forms: "1.5", "1.5+2i", "-0.5-1e-3i", "2i"
    std::string t = trim(s);
    if (t.empty()) throw std::runtime_error("empty complex literal");
    if (t.back() != 'i' && t.back() != 'I')
        return {std::strtod(t.c_str(), nullptr), 0.0};
    t.pop_back();
    // split at the last +/- that is not part of an exponent and not leading
    size_t split = std::string::npos;
    for (size_t i = t.size(); i-- > 1;) {
        char c = t[i];
        if ((c == '+' || c == '-') && t[i - 1] != 'e' && t[i - 1] != 'E') {
            split = i;
            break;
        }
    }
    if (split == std::string::npos) {
        std::string imag = t.empty() ? "1" : t;
        if (imag == "+" ) imag = "1";
        if (imag == "-") imag = "-1";
        return {0.0, std::strtod(imag.c_str(), nullptr)};
    }
    double re = std::strtod(t.substr(0, split).c_str(), nullptr);
    std::string im_str = t.substr(split);
    if (im_str == "+") im_str = "1";
    if (im_str == "-") im_str = "-1";
    return {re, std::strtod(im_str.c_str(), nullptr)};
}

std::vector<std::complex<double>> KVFile::get_complexes(const std::string& key) const {
    std::vector<std::complex<double>> out;
    for (const auto& tok : split_list(get_string(key)))
        out.push_back(parse_complex(tok));
    return out;
}

// ------------------------------------------------------------ model files

std::shared_ptr<HermiteBiehlerModel> model_from_kv(const KVFile& kv, const std::string& prefix) {
    auto key = [&](const char* k) { return prefix.empty() ? std::string(k) : prefix + "." + k; };
    std::string fam = kv.get_string(key("family"));
    Truncation tr;
    tr.n_max = kv.get_int(key("truncation.n_max"), kv.get_int("truncation.n_max", 100000));
    tr.tail_tol = kv.get_double(key("truncation.tail_tol"), kv.get_double("truncation.tail_tol", 1e-6));
    double a_phase = kv.get_double(key("a_phase"), 0.0);

    if (fam == "pw" || fam == "pw-exponential") {
        return make_model(ZeroFamily::pw_exponential(kv.get_double(key("a"))), 0.0, tr);
    }
    if (fam == "finite" || fam == "finite-list") {
        return make_model(ZeroFamily::finite_list(kv.get_complexes(key("zeros"))), a_phase, tr);
    }
    if (fam == "power" || fam == "power-family") {
        return make_model(ZeroFamily::power_family(kv.get_double(key("alpha"))), 0.0, tr);
    }
    if (fam == "ls" || fam == "ls-family") {
        return make_model(ZeroFamily::ls_family(kv.get_double(key("delta"))), 0.0, tr);
    }
    if (fam == "custom" || fam == "custom-generator") {
        std::vector<cplx> core;
        if (kv.has(key("core"))) core = kv.get_complexes(key("core"));
        return make_model(ZeroFamily::custom_generator(
                              kv.get_double(key("cx"), 1.0), kv.get_double(key("ex")),
                              kv.get_double(key("dx"), 0.0), kv.get_double(key("cy"), 1.0),
                              kv.get_double(key("ey")), std::move(core)),
                          0.0, tr);
    }
    throw std::runtime_error("unknown model family: " + fam);
}

std::shared_ptr<HermiteBiehlerModel> model_from_file(const std::string& path) {
    return model_from_kv(KVFile::parse_file(path));
}

} // namespace hblab
