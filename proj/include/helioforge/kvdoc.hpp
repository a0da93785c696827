#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace helioforge {

// Flat "key = value" text document. Model parameters, ensemble weights and
// service configuration are all stored in this format: one key per line,
// '#' starts a comment, vectors are space-separated. Keys keep insertion
// order so documents round-trip stably.
class KvDoc {
public:
    KvDoc() = default;

    static KvDoc parse(const std::string& text) {
        KvDoc doc;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            const auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("kvdoc: missing '=' on line " + std::to_string(lineno));
            doc.set(trim(trimmed.substr(0, eq)), trim(trimmed.substr(eq + 1)));
        }
        return doc;
    }

    static KvDoc load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("kvdoc: cannot open " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    void set(const std::string& key, std::string value) {
        for (auto& [k, v] : entries_)
            if (k == key) {
                v = std::move(value);
                return;
            }
        entries_.emplace_back(key, std::move(value));
    }

    void set_double(const std::string& key, double v) { set(key, format_double(v)); }
    void set_int(const std::string& key, std::int64_t v) { set(key, std::to_string(v)); }

    template <typename T>
    void set_vector(const std::string& key, const std::vector<T>& vs) {
        std::ostringstream ss;
        for (std::size_t i = 0; i < vs.size(); ++i) {
            if (i) ss << ' ';
            if constexpr (std::is_floating_point_v<T>)
                ss << format_double(vs[i]);
            else
                ss << vs[i];
        }
        set(key, ss.str());
    }

    bool has(const std::string& key) const { return find(key) != nullptr; }

    const std::string& get(const std::string& key) const {
        if (const std::string* v = find(key)) return *v;
        throw std::out_of_range("kvdoc: missing key '" + key + "'");
    }

    std::string get_or(const std::string& key, const std::string& fallback) const {
        const std::string* v = find(key);
        return v ? *v : fallback;
    }

    double get_double(const std::string& key) const { return std::stod(get(key)); }
    double get_double_or(const std::string& key, double fallback) const {
        const std::string* v = find(key);
        return v ? std::stod(*v) : fallback;
    }
    std::int64_t get_int(const std::string& key) const { return std::stoll(get(key)); }
    std::int64_t get_int_or(const std::string& key, std::int64_t fallback) const {
        const std::string* v = find(key);
        return v ? std::stoll(*v) : fallback;
    }

    std::vector<double> get_doubles(const std::string& key) const {
        std::vector<double> out;
        std::istringstream ss(get(key));
        double v;
        while (ss >> v) out.push_back(v);
        return out;
    }

    std::vector<int> get_ints(const std::string& key) const {
        std::vector<int> out;
        std::istringstream ss(get(key));
        int v;
        while (ss >> v) out.push_back(v);
        return out;
    }

    std::string str() const {
        std::ostringstream ss;
        for (const auto& [k, v] : entries_) ss << k << " = " << v << "\n";
        return ss.str();
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("kvdoc: cannot write " + path);
        out << str();
    }

    static std::string format_double(double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return buf;
    }

private:
    static std::string trim(const std::string& s) {
        std::size_t b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return {};
        std::size_t e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    const std::string* find(const std::string& key) const {
        for (const auto& [k, v] : entries_)
            if (k == key) return &v;
        return nullptr;
    }

    std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace helioforge
