#pragma once

// Report emission: CSV tables and a small deterministic JSON writer (ordered
// keys, 17 significant digits, LF endings), plus nodal field I/O with a JSON
// geometry header. All numbers go through format_double so that written
// reports are byte-stable and doubles survive a write/read round trip.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "grid.hpp"

namespace cbmech {

inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::string format_sig(double x, int digits) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, x);
    return buf;
}

// ---- CSV -------------------------------------------------------------------

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add_row(std::initializer_list<double> vals) {
        rows.emplace_back(vals);
    }
};

inline std::string to_csv(const CsvTable& t) {
    std::string out;
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
        if (c) out += ',';
        out += t.columns[c];
    }
    out += '\n';
    for (const auto& row : t.rows) {
        if (row.size() != t.columns.size())
            throw ValidationError("to_csv: row width does not match header");
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += ',';
            out += format_double(row[c]);
        }
        out += '\n';
    }
    return out;
}

inline void write_text(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);  // binary keeps LF endings
    if (!f) throw ValidationError("cannot open for writing: " + path);
    f << content;
    if (!f) throw ValidationError("write failed: " + path);
}

inline std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline void write_csv(const std::string& path, const CsvTable& t) {
    write_text(path, to_csv(t));
}

inline CsvTable read_csv(const std::string& path) {
    const std::string text = read_text(path);
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (line.back() == ',') cells.emplace_back();
        if (header) {
            t.columns = cells;
            header = false;
            continue;
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (const std::string& c : cells) {
            char* end = nullptr;
            const double v = std::strtod(c.c_str(), &end);
            if (end == c.c_str())
                throw ValidationError("read_csv: non-numeric cell '" + c + "' in " +
                                      path);
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    if (t.columns.empty()) throw ValidationError("read_csv: empty file " + path);
    return t;
}

// ---- deterministic JSON writer ---------------------------------------------

class JsonValue {
  public:
    enum class Type { null, boolean, number, integer, string, array, object };

    JsonValue() = default;
    JsonValue(bool b) : type_(Type::boolean), bool_(b) {}
    JsonValue(double d) : type_(Type::number), num_(d) {}
    JsonValue(int i) : type_(Type::integer), int_(i) {}
    JsonValue(long long i) : type_(Type::integer), int_(i) {}
    JsonValue(const char* s) : type_(Type::string), str_(s) {}
    JsonValue(std::string s) : type_(Type::string), str_(std::move(s)) {}

    static JsonValue array() {
        JsonValue v;
        v.type_ = Type::array;
        return v;
    }
    static JsonValue object() {
        JsonValue v;
        v.type_ = Type::object;
        return v;
    }

    JsonValue& push(JsonValue v) {
        require(Type::array, "push");
        items_.push_back(std::move(v));
        return items_.back();
    }
    JsonValue& set(const std::string& key, JsonValue v) {
        require(Type::object, "set");
        for (auto& kv : members_)
            if (kv.first == key) {
                kv.second = std::move(v);
                return kv.second;
            }
        members_.emplace_back(key, std::move(v));
        return members_.back().second;
    }

    void dump(std::string& out, int indent, int depth) const {
        const std::string pad(static_cast<std::size_t>(indent * depth), ' ');
        const std::string pad1(static_cast<std::size_t>(indent * (depth + 1)), ' ');
        switch (type_) {
            case Type::null: out += "null"; return;
            case Type::boolean: out += bool_ ? "true" : "false"; return;
            case Type::number: out += format_double(num_); return;
            case Type::integer: out += std::to_string(int_); return;
            case Type::string: out += quote(str_); return;
            case Type::array: {
                if (items_.empty()) {
                    out += "[]";
                    return;
                }
                out += "[\n";
                for (std::size_t i = 0; i < items_.size(); ++i) {
                    out += pad1;
                    items_[i].dump(out, indent, depth + 1);
                    if (i + 1 < items_.size()) out += ',';
                    out += '\n';
                }
                out += pad + "]";
                return;
            }
            case Type::object: {
                if (members_.empty()) {
                    out += "{}";
                    return;
                }
                out += "{\n";
                for (std::size_t i = 0; i < members_.size(); ++i) {
                    out += pad1 + quote(members_[i].first) + ": ";
                    members_[i].second.dump(out, indent, depth + 1);
                    if (i + 1 < members_.size()) out += ',';
                    out += '\n';
                }
                out += pad + "}";
                return;
            }
        }
    }

    std::string str(int indent = 2) const {
        std::string out;
        dump(out, indent, 0);
        out += '\n';
        return out;
    }

  private:
    void require(Type t, const char* op) const {
        if (type_ != t)
            throw ValidationError(std::string("JsonValue: ") + op +
                                  " on wrong value type");
    }
    static std::string quote(const std::string& s) {
        std::string out = "\"";
        for (char ch : s) {
            switch (ch) {
                case '"': out += "\\\""; break;
                case '\\': out += "\\\\"; break;
                case '\n': out += "\\n"; break;
                case '\t': out += "\\t"; break;
                case '\r': out += "\\r"; break;
                default:
                    if (static_cast<unsigned char>(ch) < 0x20) {
                        char buf[8];
                        std::snprintf(buf, sizeof(buf), "\\u%04x", ch);
                        out += buf;
                    } else {
                        out += ch;  // UTF-8 passes through
                    }
            }
        }
        out += '"';
        return out;
    }

    Type type_ = Type::null;
    bool bool_ = false;
    double num_ = 0.0;
    long long int_ = 0;
    std::string str_;
    std::vector<JsonValue> items_;
    std::vector<std::pair<std::string, JsonValue>> members_;
};

inline void write_json(const std::string& path, const JsonValue& v) {
    write_text(path, v.str());
}

// ---- nodal field I/O -------------------------------------------------------

// CSV: one node per row (i, j, k, X₁, X₂, X₃, v₁..v_c); geometry and manifold
// tag live in a JSON sidecar header.
inline void write_field(const std::string& csv_path, const std::string& header_path,
                        const Field<Vec3>& f, int ncomp, const std::string& tag) {
    if (ncomp < 1 || ncomp > 3)
        throw ValidationError("write_field: component count out of range");
    const BodyGrid& g = *f.grid;
    CsvTable t;
    t.columns = {"i", "j", "k", "X1", "X2", "X3"};
    for (int c = 0; c < ncomp; ++c) t.columns.push_back("v" + std::to_string(c + 1));
    for (int k = 0; k < g.n[2]; ++k)
        for (int j = 0; j < g.n[1]; ++j)
            for (int i = 0; i < g.n[0]; ++i) {
                const int idx = g.index(i, j, k);
                const Vec3 X = g.point(idx);
                std::vector<double> row = {static_cast<double>(i),
                                           static_cast<double>(j),
                                           static_cast<double>(k),
                                           X.v[0], X.v[1], X.v[2]};
                for (int c = 0; c < ncomp; ++c) row.push_back(f[idx].v[c]);
                t.rows.push_back(std::move(row));
            }
    write_csv(csv_path, t);

    JsonValue h = JsonValue::object();
    h.set("kind", "field-header");
    h.set("manifold", tag);
    h.set("components", ncomp);
    JsonValue n = JsonValue::array(), lo = JsonValue::array(), hi = JsonValue::array();
    for (int a = 0; a < 3; ++a) {
        n.push(g.n[a]);
        lo.push(g.lo[a]);
        hi.push(g.hi[a]);
    }
    h.set("n", std::move(n));
    h.set("lo", std::move(lo));
    h.set("hi", std::move(hi));
    h.set("rho0", g.rho0);
    write_json(header_path, h);
}

struct LoadedField {
    GridPtr grid;
    Field<Vec3> field;
    std::string manifold_tag;
    int ncomp = 0;
};

inline LoadedField read_field(const std::string& csv_path,
                              const std::string& header_path) {
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(read_text(header_path));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("read_field: bad header " + header_path + ": " +
                              e.what());
    }
    LoadedField out;
    try {
        out.manifold_tag = h.at("manifold").get<std::string>();
        out.ncomp = h.at("components").get<int>();
        int n[3];
        double lo[3], hi[3];
        for (int a = 0; a < 3; ++a) {
            n[a] = h.at("n").at(a).get<int>();
            lo[a] = h.at("lo").at(a).get<double>();
            hi[a] = h.at("hi").at(a).get<double>();
        }
        const double rho0 = h.value("rho0", 1.0);
        out.grid = make_grid(lo, hi, n, rho0);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("read_field: header field missing in " + header_path +
                              ": " + e.what());
    }
    const CsvTable t = read_csv(csv_path);
    const std::size_t expect = 6 + static_cast<std::size_t>(out.ncomp);
    if (t.columns.size() != expect)
        throw ValidationError("read_field: column count mismatches header");
    if (t.rows.size() != static_cast<std::size_t>(out.grid->count()))
        throw ValidationError("read_field: row count mismatches grid");
    out.field = Field<Vec3>(out.grid);
    for (const auto& row : t.rows) {
        const int i = static_cast<int>(row[0]);
        const int j = static_cast<int>(row[1]);
        const int k = static_cast<int>(row[2]);
        if (i < 0 || i >= out.grid->n[0] || j < 0 || j >= out.grid->n[1] || k < 0 ||
            k >= out.grid->n[2])
            throw ValidationError("read_field: node index out of range");
        const int idx = out.grid->index(i, j, k);
        for (int c = 0; c < out.ncomp; ++c)
            out.field[idx].v[c] = row[6 + static_cast<std::size_t>(c)];
    }
    return out;
}

}  // namespace cbmech
