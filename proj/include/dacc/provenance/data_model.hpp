#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dacc/common/error.hpp"

namespace dacc::provenance {

enum class PrimitiveKind : std::uint8_t { text, date, number };

inline std::string_view to_string(PrimitiveKind k)
{
    switch (k) {
    case PrimitiveKind::text: return "text";
    case PrimitiveKind::date: return "date";
    case PrimitiveKind::number: return "number";
    }
    return "?";
}

class ModelError : public Error {
public:
    using Error::Error;
};

class UnknownPath : public ModelError {
public:
    using ModelError::ModelError;
};

class InvalidValue : public ModelError {
public:
    using ModelError::ModelError;
};

/// A named use of a type inside a composite (or at the top level).
struct Instantiation {
    std::string name;
    std::string type;
    bool operator==(const Instantiation&) const = default;
};

struct CompositeType {
    std::string name;
    std::vector<Instantiation> fields;
    bool operator==(const CompositeType&) const = default;
};

/// A value bound to an instantiation path such as `identity.fullname`.
struct DataInstance {
    std::string path;
    std::string value;
    bool operator==(const DataInstance&) const = default;
    auto operator<=>(const DataInstance&) const = default;
};

/// Canonical ISO-8601 calendar date (YYYY-MM-DD); anything else is rejected.
inline std::string canonical_date(std::string_view v)
{
    auto bad = [&] { return InvalidValue("'" + std::string(v) + "' is not an ISO-8601 date (YYYY-MM-DD)"); };
    if (v.size() != 10 || v[4] != '-' || v[7] != '-') throw bad();
    auto num = [&](std::size_t off, std::size_t len) {
        int out = 0;
        auto [p, ec] = std::from_chars(v.data() + off, v.data() + off + len, out);
        if (ec != std::errc{} || p != v.data() + off + len) throw bad();
        return out;
    };
    int y = num(0, 4), m = num(5, 2), d = num(8, 2);
    static constexpr int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m < 1 || m > 12 || d < 1) throw bad();
    bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    if (d > days[m - 1] + (m == 2 && leap ? 1 : 0)) throw bad();
    return std::string(v);
}

/// Shortest decimal text that round-trips the number, e.g. "1.50" -> "1.5".
inline std::string canonical_number(std::string_view v)
{
    double x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(x))
        throw InvalidValue("'" + std::string(v) + "' is not a finite decimal number");
    if (x == 0) x = 0; // drop the sign of -0
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

inline std::string canonical_value(PrimitiveKind k, std::string_view v)
{
    switch (k) {
    case PrimitiveKind::text: return std::string(v);
    case PrimitiveKind::date: return canonical_date(v);
    case PrimitiveKind::number: return canonical_number(v);
    }
    return std::string(v);
}

/// Primitive and composite data types plus the top-level instantiations a
/// subject shares. `text`, `date` and `number` are built in.
class DataModel {
public:
    DataModel()
    {
        primitives_["text"] = PrimitiveKind::text;
        primitives_["date"] = PrimitiveKind::date;
        primitives_["number"] = PrimitiveKind::number;
    }

    /// Alias primitive, e.g. `email` as text.
    void add_primitive(const std::string& name, PrimitiveKind kind)
    {
        check_fresh(name);
        primitives_[name] = kind;
    }

    /// Fields may only use types already defined, so composition is acyclic.
    void add_composite(CompositeType t)
    {
        check_fresh(t.name);
        std::set<std::string> names;
        for (const auto& f : t.fields) {
            if (!names.insert(f.name).second)
                throw ModelError("composite " + t.name + " has duplicate field " + f.name);
            if (!has_type(f.type)) throw ModelError("composite " + t.name + " uses undefined type " + f.type);
            check_segment(f.name);
        }
        composite_order_.push_back(t.name);
        composites_[t.name] = std::move(t);
    }

    void add_root(Instantiation root)
    {
        check_segment(root.name);
        if (!has_type(root.type)) throw ModelError("instantiation " + root.name + " uses undefined type " + root.type);
        for (const auto& r : roots_)
            if (r.name == root.name) throw ModelError("duplicate instantiation " + root.name);
        roots_.push_back(std::move(root));
    }

    bool has_type(const std::string& name) const { return primitives_.contains(name) || composites_.contains(name); }

    /// Kind of the primitive an instantiation path ends in.
    PrimitiveKind resolve(std::string_view path) const
    {
        std::string type;
        std::size_t start = 0;
        bool first = true;
        while (true) {
            auto dot = path.find('.', start);
            auto seg = path.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start);
            const std::vector<Instantiation>* scope = nullptr;
            if (first) {
                scope = &roots_;
            } else {
                auto c = composites_.find(type);
                if (c == composites_.end()) throw UnknownPath("path " + std::string(path) + " descends into a primitive");
                scope = &c->second.fields;
            }
            auto it = std::find_if(scope->begin(), scope->end(), [&](const auto& i) { return i.name == seg; });
            if (it == scope->end()) throw UnknownPath("unknown instantiation path " + std::string(path));
            type = it->type;
            first = false;
            if (dot == std::string_view::npos) break;
            start = dot + 1;
        }
        auto p = primitives_.find(type);
        if (p == primitives_.end())
            throw UnknownPath("path " + std::string(path) + " names a composite, not a primitive value");
        return p->second;
    }

    /// Validates the instance and returns it with its value in canonical form.
    DataInstance canonical(const DataInstance& d) const { return {d.path, canonical_value(resolve(d.path), d.value)}; }

    /// Every primitive path reachable from the roots, in declaration order.
    std::vector<std::string> leaf_paths() const
    {
        std::vector<std::string> out;
        for (const auto& r : roots_) collect(r.name, r.type, out);
        return out;
    }

    const std::vector<Instantiation>& roots() const noexcept { return roots_; }

    nlohmann::json to_json() const
    {
        nlohmann::json prim = nlohmann::json::object();
        for (const auto& [k, v] : primitives_)
            if (k != "text" && k != "date" && k != "number") prim[k] = to_string(v);
        nlohmann::json comps = nlohmann::json::array();
        for (const auto& name : composite_order_) {
            nlohmann::json fields = nlohmann::json::array();
            for (const auto& f : composites_.at(name).fields) fields.push_back({{"name", f.name}, {"type", f.type}});
            comps.push_back({{"name", name}, {"fields", fields}});
        }
        nlohmann::json roots = nlohmann::json::array();
        for (const auto& r : roots_) roots.push_back({{"name", r.name}, {"type", r.type}});
        return {{"primitives", prim}, {"composites", comps}, {"instantiations", roots}};
    }

    static DataModel from_json(const nlohmann::json& j)
    {
        DataModel m;
        try {
            if (j.contains("primitives"))
                for (const auto& [k, v] : j.at("primitives").items()) {
                    auto kind = v.get<std::string>();
                    if (kind == "text")
                        m.add_primitive(k, PrimitiveKind::text);
                    else if (kind == "date")
                        m.add_primitive(k, PrimitiveKind::date);
                    else if (kind == "number")
                        m.add_primitive(k, PrimitiveKind::number);
                    else
                        throw ModelError("primitive " + k + " has unknown kind " + kind);
                }
            if (j.contains("composites"))
                for (const auto& c : j.at("composites")) {
                    CompositeType t{c.at("name").get<std::string>(), {}};
                    for (const auto& f : c.at("fields"))
                        t.fields.push_back({f.at("name").get<std::string>(), f.at("type").get<std::string>()});
                    m.add_composite(std::move(t));
                }
            for (const auto& r : j.at("instantiations"))
                m.add_root({r.at("name").get<std::string>(), r.at("type").get<std::string>()});
        } catch (const nlohmann::json::exception& e) {
            throw ModelError(std::string("malformed data model: ") + e.what());
        }
        return m;
    }

private:
    std::map<std::string, PrimitiveKind> primitives_;
    std::map<std::string, CompositeType> composites_;
    std::vector<std::string> composite_order_;
    std::vector<Instantiation> roots_;

    void check_fresh(const std::string& name)
    {
        if (name.empty()) throw ModelError("type name is empty");
        if (has_type(name)) throw ModelError("type " + name + " is already defined");
    }

    static void check_segment(const std::string& s)
    {
        if (s.empty() || s.find('.') != std::string::npos)
            throw ModelError("instantiation name '" + s + "' must be nonempty and contain no '.'");
    }

    void collect(const std::string& prefix, const std::string& type, std::vector<std::string>& out) const
    {
        auto c = composites_.find(type);
        if (c == composites_.end()) {
            out.push_back(prefix);
            return;
        }
        for (const auto& f : c->second.fields) collect(prefix + "." + f.name, f.type, out);
    }
};

} // namespace dacc::provenance
