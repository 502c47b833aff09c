#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nlslab/errors.hpp"
#include "nlslab/evolver.hpp"
#include "nlslab/grid.hpp"

namespace nlslab {

/// Doubles rendered with 17 significant digits round-trip exactly, which is
/// what makes repeated runs byte-identical.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// FNV-1a 64-bit hash, hex-encoded: stable across platforms and runs, used to
/// give every artifact a config-determined name.
inline std::string fnv1a64_hex(const std::string& text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write file: " + path);
    out << content;
}

/// Field CSV schema: header "r,re,im", one row per interior grid node.
inline std::string field_csv(const ComplexField& u) {
    std::string out = "r,re,im\n";
    for (int j = 0; j < u.size(); ++j) {
        out += fmt17(u.grid().r(j));
        out += ',';
        out += fmt17(u[j].real());
        out += ',';
        out += fmt17(u[j].imag());
        out += '\n';
    }
    return out;
}

inline void write_field_csv(const std::string& path, const ComplexField& u) {
    write_text_file(path, field_csv(u));
}

namespace detail {

inline std::vector<std::vector<double>> parse_csv_rows(const std::string& text,
                                                       const std::string& header,
                                                       const std::string& what) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw UsageError(what + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != header)
        throw UsageError(what + ": expected header \"" + header + "\", got \"" +
                         line + "\"");
    const auto n_cols = static_cast<std::size_t>(
        std::count(header.begin(), header.end(), ',') + 1);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            const auto comma = line.find(',', pos);
            const std::string cell =
                line.substr(pos, comma == std::string::npos ? comma : comma - pos);
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw UsageError(what + ": bad numeric cell \"" + cell + "\"");
            }
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (row.size() != n_cols)
            throw UsageError(what + ": wrong column count in row " +
                             std::to_string(rows.size() + 1));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw UsageError(what + ": no data rows");
    return rows;
}

} // namespace detail

/// Rebuild a field from its CSV: the grid is inferred from the radii, which
/// must be the uniform interior nodes r_j = (j+1)·dr.
inline ComplexField read_field_csv(const std::string& path, NlsParams params) {
    const auto rows = detail::parse_csv_rows(read_text_file(path), "r,re,im",
                                             "field csv " + path);
    const int n = static_cast<int>(rows.size());
    const double dr = rows.front()[0];
    if (!(dr > 0.0)) throw UsageError("field csv " + path + ": first radius must be positive");
    for (int j = 0; j < n; ++j) {
        const double expect = (j + 1) * dr;
        if (std::abs(rows[j][0] - expect) > 1e-9 * std::max(1.0, expect))
            throw UsageError("field csv " + path +
                             ": radii are not a uniform interior grid");
    }
    const RadialGrid grid{(n + 1) * dr, n};
    std::vector<complexd> values(n);
    for (int j = 0; j < n; ++j) values[j] = complexd{rows[j][1], rows[j][2]};
    return ComplexField::zero(grid, params).with_values(std::move(values));
}

/// Trace CSV schema, one row per recorded sample.
inline std::string trace_csv(const EvolutionTrace& trace) {
    std::string out = "t,mass,energy,grad_sq,virial,virial_rate,r0,lambda,linf\n";
    for (std::size_t i = 0; i < trace.times.size(); ++i) {
        const auto& f = trace.functionals[i];
        out += fmt17(trace.times[i]);
        for (double v : {f.mass, f.energy, f.grad_sq, f.virial, f.virial_rate,
                         trace.r0[i], trace.lambda[i], f.linf}) {
            out += ',';
            out += fmt17(v);
        }
        out += '\n';
    }
    return out;
}

inline void write_trace_csv(const std::string& path, const EvolutionTrace& trace) {
    write_text_file(path, trace_csv(trace));
}

/// Minimal deterministic JSON emitter: insertion order preserved, doubles via
/// fmt17, two-space indentation. Enough structure for the report formats
/// without dragging a serializer dependency into the output path.
class JsonWriter {
  public:
    JsonWriter() { open_scope('{'); }

    JsonWriter& num(const std::string& key, double v) {
        item(key);
        out_ += fmt17(v);
        return *this;
    }
    JsonWriter& integer(const std::string& key, long long v) {
        item(key);
        out_ += std::to_string(v);
        return *this;
    }
    JsonWriter& str(const std::string& key, const std::string& v) {
        item(key);
        out_ += quoted(v);
        return *this;
    }
    JsonWriter& boolean(const std::string& key, bool v) {
        item(key);
        out_ += v ? "true" : "false";
        return *this;
    }
    /// Pre-rendered JSON value (e.g. an exact rational as number or string).
    JsonWriter& raw(const std::string& key, const std::string& v) {
        item(key);
        out_ += v;
        return *this;
    }

    JsonWriter& begin_obj(const std::string& key) {
        item(key);
        open_scope('{');
        return *this;
    }
    JsonWriter& begin_array(const std::string& key) {
        item(key);
        open_scope('[');
        return *this;
    }
    JsonWriter& begin_item_obj() {
        item("");
        open_scope('{');
        return *this;
    }
    JsonWriter& num_item(double v) {
        item("");
        out_ += fmt17(v);
        return *this;
    }
    JsonWriter& str_item(const std::string& v) {
        item("");
        out_ += quoted(v);
        return *this;
    }
    JsonWriter& end() {
        close_scope();
        return *this;
    }

    std::string take() {
        while (!stack_.empty()) close_scope();
        out_ += '\n';
        return std::move(out_);
    }

  private:
    static std::string quoted(const std::string& s) {
        std::string q = "\"";
        for (char c : s) {
            switch (c) {
                case '"': q += "\\\""; break;
                case '\\': q += "\\\\"; break;
                case '\n': q += "\\n"; break;
                case '\t': q += "\\t"; break;
                default:
                    if (static_cast<unsigned char>(c) < 0x20) {
                        char buf[8];
                        std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                        q += buf;
                    } else {
                        q += c;
                    }
            }
        }
        q += '"';
        return q;
    }

    void item(const std::string& key) {
        if (!first_) out_ += ',';
        first_ = false;
        out_ += '\n';
        out_.append(2 * stack_.size(), ' ');
        if (!stack_.empty() && stack_.back() == '{') out_ += quoted(key) + ": ";
    }

    void open_scope(char kind) {
        out_ += kind;
        stack_.push_back(kind);
        first_ = true;
    }

    void close_scope() {
        const char kind = stack_.back();
        stack_.pop_back();
        if (!first_) {
            out_ += '\n';
            out_.append(2 * stack_.size(), ' ');
        }
        out_ += kind == '{' ? '}' : ']';
        first_ = false;
    }

    std::string out_;
    std::vector<char> stack_;
    bool first_ = true;
};

} // namespace nlslab
